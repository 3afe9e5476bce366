#include "fedsciml/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedsciml::experiments {

TrainingDefaults training_defaults(const std::string& problem) {
    TrainingDefaults d;
    if (problem == "gramacy" || problem == "schaffer")
        d.rounds = 3000;
    else if (problem == "poisson1d")
        d.rounds = 1000;
    else if (problem == "helmholtz2d")
        d.rounds = 2000;
    else if (problem == "allen-cahn")
        d.rounds = 10000;
    else if (problem == "inverse-dr")
        d.rounds = 20000;
    else if (problem == "antiderivative" || problem == "dr" || problem == "burgers")
        d.rounds = 10000;
    else
        throw UsageError("unknown problem '" + problem + "'");
    return d;
}

std::vector<int> default_sweep(const std::string& problem) {
    if (problem == "gramacy")
        return {2, 4, 10, 20, 40, 100, 200};
    if (problem == "schaffer")
        return {2, 4, 6, 10, 16, 25};
    if (problem == "poisson1d")
        return {6, 8, 10, 16, 32};
    if (problem == "helmholtz2d")
        return {2, 4, 6, 10, 12, 24};
    if (problem == "allen-cahn")
        return {2, 4, 6, 8, 10, 20, 32, 40};
    if (problem == "inverse-dr")
        return {2, 4, 6, 8, 12, 24};
    if (is_operator_problem(problem))
        return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    throw UsageError("unknown problem '" + problem + "'");
}

bool is_operator_problem(const std::string& problem) {
    return problem == "antiderivative" || problem == "dr" || problem == "burgers";
}

std::unique_ptr<fed::FederatedProblem> build_problem(const std::string& name, int n,
                                                     int clients,
                                                     const pde::ProblemOptions& popts,
                                                     const onet::OperatorOptions& oopts) {
    if (is_operator_problem(name))
        return onet::make_operator_problem(name, n, clients, oopts);
    return pde::make_problem(name, popts);
}

double ComparisonResult::worst_extrapolation_error() const {
    double worst = 0.0;
    for (const auto& e : extrapolation)
        worst = std::max(worst, e.test_error);
    return worst;
}

ComparisonResult run_comparison(const fed::FederatedProblem& problem, int n,
                                const fed::FederationConfig& config) {
    auto shards = problem.make_shards(n, config.clients);

    ComparisonResult result;
    result.n = n;
    result.w1 = problem.heterogeneity(shards);

    result.federated_run = fed::run_training(problem, shards, config);
    result.federated_error = problem.test_error(result.federated_run.params);
    result.federated_secondary = problem.secondary_test_error(result.federated_run.params);

    result.centralized_run = fed::run_centralized_twin(problem, shards, config);
    result.centralized_error = problem.test_error(result.centralized_run.params);
    result.centralized_secondary =
        problem.secondary_test_error(result.centralized_run.params);

    result.extrapolation = fed::run_extrapolation(problem, shards, config);

    auto blocks = problem.param_blocks();
    result.final_divergence = fed::weight_divergence(
        result.federated_run.params, result.centralized_run.params, blocks, config.rounds);
    return result;
}

namespace {
std::vector<double> ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]])
            ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}
} // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw UsageError("spearman: need two equal-length series of size >= 2");
    auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0)
        return 0.0;
    return cov / std::sqrt(va * vb);
}

} // namespace fedsciml::experiments
