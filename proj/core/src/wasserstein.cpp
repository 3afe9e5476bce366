#include "fedsciml/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fedsciml::ot {

void DiscreteDistribution::validate() const {
    if (support.size() == 0)
        throw UsageError("distribution: empty support");
    if (weights.size() != support.size())
        throw UsageError("distribution: weight/support size mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0)
            throw UsageError("distribution: negative weight");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw UsageError("distribution: weights must sum to 1");
}

DiscreteDistribution DiscreteDistribution::uniform_over(const data::PointSet& points) {
    if (points.size() == 0)
        throw UsageError("distribution: empty support");
    DiscreteDistribution d;
    d.support = points;
    d.weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
    return d;
}

DiscreteDistribution DiscreteDistribution::from_shard(const data::Shard& shard) {
    return uniform_over(shard.points);
}

DiscreteDistribution DiscreteDistribution::subsample(std::size_t cap, CounterRng& rng) const {
    if (cap == 0 || support.size() <= cap)
        return *this;
    // Partial Fisher-Yates over index array, then uniform weights.
    std::vector<std::size_t> idx(support.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < cap; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    data::PointSet pts(support.dim);
    for (std::size_t i : idx)
        pts.push_back(support.point(i));
    return uniform_over(pts);
}

std::vector<double> cost_matrix(const DiscreteDistribution& mu,
                                const DiscreteDistribution& nu) {
    if (mu.support.dim != nu.support.dim)
        throw UsageError("cost_matrix: dimension mismatch");
    const std::size_t n1 = mu.support.size(), n2 = nu.support.size();
    const std::size_t dim = mu.support.dim;
    std::vector<double> m(n1 * n2);
    for (std::size_t i = 0; i < n1; ++i) {
        auto p = mu.support.point(i);
        for (std::size_t j = 0; j < n2; ++j) {
            auto q = nu.support.point(j);
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                double diff = p[d] - q[d];
                s += diff * diff;
            }
            m[i * n2 + j] = std::sqrt(s);
        }
    }
    return m;
}

EmdResult emd_w1(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
    mu.validate();
    nu.validate();
    const std::vector<double> cost = cost_matrix(mu, nu);
    const std::size_t n1 = mu.support.size(), n2 = nu.support.size();

    // Successive shortest augmenting paths on the bipartite transport graph.
    // Nodes: sources [0, n1), sinks [n1, n1+n2). Forward arcs i -> j are
    // uncapacitated with cost c_ij; backward arcs j -> i exist while
    // gamma_ij > 0 with cost -c_ij. Node potentials pi keep reduced costs
    // rc(u -> w) = c + pi[u] - pi[w] nonnegative, so dense Dijkstra applies.
    std::vector<double> supply(mu.weights), demand(nu.weights);
    std::vector<double> gamma(n1 * n2, 0.0);

    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr double kMassEps = 1e-15;
    const std::size_t n_nodes = n1 + n2;

    std::vector<double> pi(n_nodes, 0.0);
    std::vector<double> dist(n_nodes);
    std::vector<std::uint32_t> prev(n_nodes);
    std::vector<std::uint8_t> done(n_nodes);
    std::vector<std::size_t> path;

    double remaining = 0.0;
    for (double s : supply)
        remaining += s;

    const std::size_t max_rounds = 16 * n_nodes + 1024;
    std::size_t rounds = 0;

    while (remaining > kMassEps) {
        if (++rounds > max_rounds)
            throw NumericError("emd_w1: augmentation did not terminate");

        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(done.begin(), done.end(), 0);
        for (std::size_t i = 0; i < n1; ++i)
            if (supply[i] > kMassEps)
                dist[i] = 0.0;

        std::size_t target = n_nodes;
        while (true) {
            std::size_t u = n_nodes;
            double best = kInf;
            for (std::size_t k = 0; k < n_nodes; ++k)
                if (!done[k] && dist[k] < best) {
                    best = dist[k];
                    u = k;
                }
            if (u == n_nodes)
                break;
            done[u] = 1;
            if (u >= n1 && demand[u - n1] > kMassEps) {
                target = u;
                break;
            }
            if (u < n1) {
                const double* crow = cost.data() + u * n2;
                for (std::size_t j = 0; j < n2; ++j) {
                    const std::size_t w = n1 + j;
                    if (done[w])
                        continue;
                    double rc = crow[j] + pi[u] - pi[w];
                    if (rc < 0.0)
                        rc = 0.0; // roundoff clamp
                    if (dist[u] + rc < dist[w]) {
                        dist[w] = dist[u] + rc;
                        prev[w] = static_cast<std::uint32_t>(u);
                    }
                }
            } else {
                const std::size_t j = u - n1;
                for (std::size_t i = 0; i < n1; ++i) {
                    if (done[i] || gamma[i * n2 + j] <= kMassEps)
                        continue;
                    double rc = -cost[i * n2 + j] + pi[u] - pi[i];
                    if (rc < 0.0)
                        rc = 0.0;
                    if (dist[u] + rc < dist[i]) {
                        dist[i] = dist[u] + rc;
                        prev[i] = static_cast<std::uint32_t>(u);
                    }
                }
            }
        }
        if (target == n_nodes)
            throw NumericError("emd_w1: no augmenting path (malformed weights)");

        const double dt = dist[target];
        for (std::size_t u = 0; u < n_nodes; ++u)
            pi[u] += std::min(dist[u], dt);

        // Walk back to a root source (dist 0 with remaining supply).
        path.clear();
        std::size_t node = target;
        path.push_back(node);
        while (!(node < n1 && dist[node] == 0.0 && supply[node] > kMassEps)) {
            node = prev[node];
            path.push_back(node);
        }
        const std::size_t root = node;

        double flow = std::min(supply[root], demand[target - n1]);
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            const std::size_t to = path[k], from = path[k + 1];
            if (to < n1) // backward arc: sink `from` -> source `to`
                flow = std::min(flow, gamma[to * n2 + (from - n1)]);
        }
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            const std::size_t to = path[k], from = path[k + 1];
            if (to >= n1)
                gamma[from * n2 + (to - n1)] += flow;
            else
                gamma[to * n2 + (from - n1)] -= flow;
        }
        supply[root] -= flow;
        demand[target - n1] -= flow;
        remaining -= flow;
    }

    EmdResult result;
    result.plan.rows = n1;
    result.plan.cols = n2;
    result.plan.gamma = std::move(gamma);
    double obj = 0.0;
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            obj += result.plan.gamma[i * n2 + j] * cost[i * n2 + j];
    result.plan.objective = obj;
    result.w1 = obj;
    return result;
}

double w1_1d_closed_form(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
    mu.validate();
    nu.validate();
    if (mu.support.dim != 1 || nu.support.dim != 1)
        throw UsageError("w1_1d_closed_form: supports must be 1-dimensional");

    struct Event {
        double x, w_mu, w_nu;
    };
    std::vector<Event> events;
    events.reserve(mu.support.size() + nu.support.size());
    for (std::size_t i = 0; i < mu.support.size(); ++i)
        events.push_back({mu.support.point(i)[0], mu.weights[i], 0.0});
    for (std::size_t j = 0; j < nu.support.size(); ++j)
        events.push_back({nu.support.point(j)[0], 0.0, nu.weights[j]});
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.x < b.x; });

    // Integral of |F_mu - F_nu| equals the L1 quantile distance.
    double total = 0.0, cdf_diff = 0.0;
    for (std::size_t k = 0; k + 1 < events.size(); ++k) {
        cdf_diff += events[k].w_mu - events[k].w_nu;
        total += std::fabs(cdf_diff) * (events[k + 1].x - events[k].x);
    }
    return total;
}

double mean_pairwise_w1(std::span<const DiscreteDistribution> dists) {
    const std::size_t k = dists.size();
    if (k < 2)
        throw UsageError("mean_pairwise_w1: need at least 2 distributions");
    if (k == 2)
        return emd_w1(dists[0], dists[1]).w1;
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            sum += emd_w1(dists[i], dists[j]).w1;
    const double norm = static_cast<double>(k - 2) * static_cast<double>(k - 1);
    return sum / norm;
}

} // namespace fedsciml::ot
