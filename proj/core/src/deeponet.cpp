#include "fedsciml/deeponet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "fedsciml/csv.hpp"
#include "fedsciml/solvers.hpp"
#include "fedsciml/wasserstein.hpp"

namespace fedsciml::onet {

void DeepOnetSpec::validate() const {
    branch.validate();
    trunk.validate();
    if (branch.output_width() != trunk.output_width())
        throw UsageError("deeponet: branch and trunk output widths must match");
}

std::vector<double> DeepOnetParams::flatten() const {
    std::vector<double> flat = branch.flatten();
    auto t = trunk.flatten();
    flat.insert(flat.end(), t.begin(), t.end());
    flat.push_back(bias);
    return flat;
}

DeepOnetParams DeepOnetParams::from_flat(const DeepOnetSpec& spec,
                                         std::span<const double> flat) {
    spec.validate();
    if (flat.size() != spec.param_count())
        throw UsageError("deeponet: flat buffer size mismatch");
    DeepOnetParams p;
    p.branch = nn::MlpParams::from_flat(spec.branch, flat.first(spec.branch.param_count()));
    p.trunk = nn::MlpParams::from_flat(
        spec.trunk, flat.subspan(spec.branch.param_count(), spec.trunk.param_count()));
    p.bias = flat.back();
    return p;
}

void SensorGrid::validate() const {
    if (locations.size() < 2)
        throw UsageError("sensor grid: need at least 2 sensors");
    for (std::size_t i = 0; i + 1 < locations.size(); ++i)
        if (locations[i] >= locations[i + 1])
            throw UsageError("sensor grid: locations must be sorted and distinct");
}

SensorGrid SensorGrid::uniform(int count, double lo, double hi) {
    SensorGrid g;
    for (int i = 0; i < count; ++i)
        g.locations.push_back(lo + (hi - lo) * i / (count - 1));
    g.validate();
    return g;
}

std::vector<OperatorSample> OperatorDataset::samples() const {
    std::vector<OperatorSample> out;
    out.reserve(sample_count());
    for (int f = 0; f < function_count; ++f) {
        for (int q = 0; q < queries_per_function; ++q) {
            OperatorSample s;
            s.sensor_values.assign(
                sensors.begin() + static_cast<std::ptrdiff_t>(f) * sensor_count,
                sensors.begin() + static_cast<std::ptrdiff_t>(f + 1) * sensor_count);
            s.query.assign(queries.begin() + static_cast<std::ptrdiff_t>(q) * query_dim,
                           queries.begin() + static_cast<std::ptrdiff_t>(q + 1) * query_dim);
            s.target = targets[static_cast<std::size_t>(f) * queries_per_function + q];
            s.function_id = function_ids[static_cast<std::size_t>(f)];
            out.push_back(std::move(s));
        }
    }
    return out;
}

OperatorDataset OperatorDataset::concat(std::span<const OperatorDataset> parts) {
    if (parts.empty())
        throw UsageError("operator dataset: empty concat");
    OperatorDataset all = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& p = parts[i];
        if (p.sensor_count != all.sensor_count || p.query_dim != all.query_dim ||
            p.queries != all.queries)
            throw UsageError("operator dataset: incompatible parts (query grids differ)");
        all.sensors.insert(all.sensors.end(), p.sensors.begin(), p.sensors.end());
        all.targets.insert(all.targets.end(), p.targets.begin(), p.targets.end());
        all.function_ids.insert(all.function_ids.end(), p.function_ids.begin(),
                                p.function_ids.end());
        all.function_count += p.function_count;
    }
    return all;
}

double deeponet_forward(const DeepOnetParams& params,
                        std::span<const double> sensor_values,
                        std::span<const double> query) {
    auto b = nn::mlp_forward_values(params.branch, sensor_values);
    auto t = nn::mlp_forward_values(params.trunk, query);
    double acc = params.bias;
    for (std::size_t k = 0; k < b.size(); ++k)
        acc = b[k] * t[k] + acc;
    return acc;
}

ad::Var deeponet_forward(ad::Tape& tape, const DeepOnetSpec& spec,
                         std::span<const ad::Var> flat_params,
                         std::span<const ad::Var> sensor_values,
                         std::span<const ad::Var> query) {
    spec.validate();
    if (flat_params.size() != spec.param_count())
        throw UsageError("deeponet_forward: parameter count mismatch");
    auto branch_params = flat_params.first(spec.branch.param_count());
    auto trunk_params =
        flat_params.subspan(spec.branch.param_count(), spec.trunk.param_count());
    auto b = nn::mlp_forward(tape, spec.branch, branch_params, sensor_values);
    auto t = nn::mlp_forward(tape, spec.trunk, trunk_params, query);
    ad::Var acc = flat_params.back(); // b0
    for (std::size_t k = 0; k < b.size(); ++k)
        acc = tape.mul_add(b[k], t[k], acc);
    return acc;
}

// --- Dataset builders -----------------------------------------------------------

namespace {

std::vector<data::ChebyshevFunction> draw_functions(const data::ChebyshevSpaceSpec& spec,
                                                    int count, CounterRng& rng) {
    if (count < 1)
        throw UsageError("operator dataset: count must be >= 1");
    return data::sample_chebyshev(spec, rng, count);
}

void fill_sensors(OperatorDataset& ds, const SensorGrid& sensors,
                  const std::function<double(const data::ChebyshevFunction&, double)>& eval,
                  const std::vector<data::ChebyshevFunction>& fns) {
    ds.sensor_count = static_cast<int>(sensors.locations.size());
    for (const auto& fn : fns)
        for (double x : sensors.locations)
            ds.sensors.push_back(eval(fn, x));
}

} // namespace

OperatorDataset build_antiderivative_dataset(const data::ChebyshevSpaceSpec& spec,
                                             int count, const SensorGrid& sensors,
                                             std::span<const double> queries,
                                             CounterRng& rng, int first_function_id) {
    sensors.validate();
    if (queries.empty())
        throw UsageError("antiderivative dataset: empty query grid");
    auto fns = draw_functions(spec, count, rng);

    OperatorDataset ds;
    ds.query_dim = 1;
    ds.function_count = count;
    ds.queries_per_function = static_cast<int>(queries.size());
    ds.queries.assign(queries.begin(), queries.end());
    fill_sensors(ds, sensors, [](const data::ChebyshevFunction& f, double x) { return f(x); },
                 fns);
    for (int f = 0; f < count; ++f) {
        ds.function_ids.push_back(first_function_id + f);
        auto u = solvers::integrate_antiderivative(
            [&](double x) { return fns[static_cast<std::size_t>(f)](x); }, queries);
        ds.targets.insert(ds.targets.end(), u.begin(), u.end());
    }
    return ds;
}

OperatorDataset build_dr_dataset(const data::ChebyshevSpaceSpec& spec, int count,
                                 const SensorGrid& sensors, int query_stride,
                                 CounterRng& rng, int first_function_id) {
    sensors.validate();
    if (query_stride < 1)
        throw UsageError("dr dataset: query stride must be >= 1");
    auto fns = draw_functions(spec, count, rng);

    solvers::DrTimeOptions mesh; // 101 x 101 per the reference discretization
    OperatorDataset ds;
    ds.query_dim = 2;
    ds.function_count = count;
    for (int ti = 0; ti < mesh.nt; ti += query_stride)
        for (int xi = 0; xi < mesh.nx; xi += query_stride) {
            ds.queries.push_back(static_cast<double>(xi) / (mesh.nx - 1));
            ds.queries.push_back(static_cast<double>(ti) / (mesh.nt - 1));
        }
    ds.queries_per_function = static_cast<int>(ds.queries.size() / 2);
    fill_sensors(ds, sensors, [](const data::ChebyshevFunction& f, double x) { return f(x); },
                 fns);
    for (int f = 0; f < count; ++f) {
        ds.function_ids.push_back(first_function_id + f);
        auto rep = solvers::solve_dr_time(
            [&](double x) { return fns[static_cast<std::size_t>(f)](x); }, mesh);
        for (int ti = 0; ti < mesh.nt; ti += query_stride)
            for (int xi = 0; xi < mesh.nx; xi += query_stride)
                ds.targets.push_back(rep.values[static_cast<std::size_t>(ti) * mesh.nx + xi]);
    }
    return ds;
}

OperatorDataset build_burgers_dataset(const data::ChebyshevSpaceSpec& spec, int count,
                                      const SensorGrid& sensors, int query_stride,
                                      CounterRng& rng, int first_function_id) {
    sensors.validate();
    if (query_stride < 1)
        throw UsageError("burgers dataset: query stride must be >= 1");
    auto fns = draw_functions(spec, count, rng);

    solvers::BurgersOptions mesh;
    const double two_pi = 2.0 * std::numbers::pi;
    auto periodized = [&](const data::ChebyshevFunction& f, double x) {
        return f(std::cos(two_pi * x));
    };

    OperatorDataset ds;
    ds.query_dim = 2;
    ds.function_count = count;
    for (int ti = 0; ti < mesh.nt_out; ti += 2 * query_stride)
        for (int xi = 0; xi < mesh.nx; xi += query_stride) {
            ds.queries.push_back(static_cast<double>(xi) / mesh.nx); // periodic: x in [0,1)
            ds.queries.push_back(static_cast<double>(ti) / (mesh.nt_out - 1));
        }
    ds.queries_per_function = static_cast<int>(ds.queries.size() / 2);
    fill_sensors(ds, sensors, periodized, fns);
    for (int f = 0; f < count; ++f) {
        ds.function_ids.push_back(first_function_id + f);
        std::vector<double> init(static_cast<std::size_t>(mesh.nx));
        for (int i = 0; i < mesh.nx; ++i)
            init[static_cast<std::size_t>(i)] =
                periodized(fns[static_cast<std::size_t>(f)], static_cast<double>(i) / mesh.nx);
        auto rep = solvers::solve_burgers(init, mesh);
        for (int ti = 0; ti < mesh.nt_out; ti += 2 * query_stride)
            for (int xi = 0; xi < mesh.nx; xi += query_stride)
                ds.targets.push_back(rep.values[static_cast<std::size_t>(ti) * mesh.nx + xi]);
    }
    return ds;
}

OperatorError operator_error(const DeepOnetParams& params, const OperatorDataset& test) {
    if (test.function_count == 0)
        throw UsageError("operator_error: empty test set");
    OperatorError result;
    double sum = 0.0;
    int counted = 0;
    std::vector<double> trunk_out;
    for (int f = 0; f < test.function_count; ++f) {
        std::span<const double> sv{test.sensors.data() +
                                       static_cast<std::size_t>(f) * test.sensor_count,
                                   static_cast<std::size_t>(test.sensor_count)};
        auto b = nn::mlp_forward_values(params.branch, sv);
        double diff_sq = 0.0, ref_sq = 0.0;
        for (int q = 0; q < test.queries_per_function; ++q) {
            std::span<const double> xi{test.queries.data() +
                                           static_cast<std::size_t>(q) * test.query_dim,
                                       static_cast<std::size_t>(test.query_dim)};
            auto t = nn::mlp_forward_values(params.trunk, xi);
            double pred = params.bias;
            for (std::size_t k = 0; k < b.size(); ++k)
                pred = b[k] * t[k] + pred;
            const double u = test.targets[static_cast<std::size_t>(f) * test.queries_per_function + q];
            diff_sq += (pred - u) * (pred - u);
            ref_sq += u * u;
        }
        if (ref_sq <= 1e-28) {
            ++result.skipped;
            continue;
        }
        sum += std::sqrt(diff_sq / ref_sq);
        ++counted;
    }
    if (counted == 0)
        throw UsageError("operator_error: every target function has zero norm");
    result.mean = sum / counted;
    return result;
}

void write_operator_csv(const std::string& path, const OperatorDataset& ds) {
    std::ofstream os(path);
    if (!os)
        throw UsageError("cannot open '" + path + "' for writing");
    os << "# schema: fedsciml/operator/v1\n";
    os << "function_id";
    for (int i = 0; i < ds.sensor_count; ++i)
        os << ",v" << i;
    for (int d = 0; d < ds.query_dim; ++d)
        os << ",q" << d;
    os << ",u\n";
    for (int f = 0; f < ds.function_count; ++f) {
        for (int q = 0; q < ds.queries_per_function; ++q) {
            os << ds.function_ids[static_cast<std::size_t>(f)];
            for (int i = 0; i < ds.sensor_count; ++i)
                os << ","
                   << csv::format_double(
                          ds.sensors[static_cast<std::size_t>(f) * ds.sensor_count + i]);
            for (int d = 0; d < ds.query_dim; ++d)
                os << ","
                   << csv::format_double(
                          ds.queries[static_cast<std::size_t>(q) * ds.query_dim + d]);
            os << ","
               << csv::format_double(
                      ds.targets[static_cast<std::size_t>(f) * ds.queries_per_function + q])
               << "\n";
        }
    }
}

OperatorDataset read_operator_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw UsageError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(is, line) || line.rfind("# schema: fedsciml/operator/", 0) != 0)
        throw UsageError("'" + path + "': missing operator schema header");
    if (!std::getline(is, line))
        throw UsageError("'" + path + "': missing column header");
    auto cols = csv::split(line);
    int m = 0, qdim = 0;
    for (const auto& c : cols) {
        if (c.rfind('v', 0) == 0 && c.size() > 1)
            ++m;
        else if (c.rfind('q', 0) == 0 && c.size() > 1)
            ++qdim;
    }
    if (m == 0 || qdim == 0)
        throw UsageError("'" + path + "': bad operator header");

    OperatorDataset ds;
    ds.sensor_count = m;
    ds.query_dim = qdim;
    int last_id = -1;
    std::vector<double> first_queries;
    bool collecting_queries = true;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        auto f = csv::split(line);
        if (f.size() != cols.size())
            throw UsageError("'" + path + "': ragged row");
        const int id = std::stoi(f[0]);
        if (id != last_id) {
            ds.function_ids.push_back(id);
            ++ds.function_count;
            for (int i = 0; i < m; ++i)
                ds.sensors.push_back(std::stod(f[static_cast<std::size_t>(1 + i)]));
            if (last_id != -1)
                collecting_queries = false;
            last_id = id;
        }
        if (collecting_queries)
            for (int d = 0; d < qdim; ++d)
                first_queries.push_back(std::stod(f[static_cast<std::size_t>(1 + m + d)]));
        ds.targets.push_back(std::stod(f.back()));
    }
    ds.queries = std::move(first_queries);
    ds.queries_per_function = static_cast<int>(ds.queries.size() / qdim);
    if (ds.function_count == 0 ||
        ds.targets.size() != ds.sample_count())
        throw UsageError("'" + path + "': inconsistent operator data");
    return ds;
}

// --- Operator loss ----------------------------------------------------------------

namespace {

/// Full-batch MSE over (function, query) pairs with branch and trunk
/// subgraphs shared: one branch pass per function slot, one trunk pass per
/// query. Chunks over functions; the query grid is fixed.
class OperatorLoss final : public fed::ClientLoss {
public:
    OperatorLoss(const DeepOnetSpec& spec, OperatorDataset data, std::size_t max_chunk_fns)
        : spec_(spec), data_(std::move(data)) {
        spec_.validate();
        n_params_ = spec_.param_count();
        const std::size_t F = static_cast<std::size_t>(data_.function_count);
        chunk_fns_ = (max_chunk_fns == 0 || max_chunk_fns >= F) ? F : max_chunk_fns;
        n_chunks_ = (F + chunk_fns_ - 1) / chunk_fns_;

        for (std::size_t i = 0; i < n_params_; ++i)
            param_leaves_.push_back(tape_.leaf(0.0));

        const int m = data_.sensor_count;
        const int Q = data_.queries_per_function;
        const int qd = data_.query_dim;

        // Trunk outputs, one pass per query point (constants: grid is fixed).
        std::vector<std::vector<ad::Var>> trunk_out(static_cast<std::size_t>(Q));
        auto trunk_params =
            std::span<const ad::Var>(param_leaves_)
                .subspan(spec_.branch.param_count(), spec_.trunk.param_count());
        for (int q = 0; q < Q; ++q) {
            std::vector<ad::Var> xi;
            for (int d = 0; d < qd; ++d)
                xi.push_back(tape_.constant(data_.queries[static_cast<std::size_t>(q) * qd + d]));
            trunk_out[static_cast<std::size_t>(q)] =
                nn::mlp_forward(tape_, spec_.trunk, trunk_params, xi);
        }

        auto branch_params = std::span<const ad::Var>(param_leaves_).first(spec_.branch.param_count());
        ad::Var b0 = param_leaves_.back();
        ad::Var acc = tape_.constant(0.0);
        for (std::size_t s = 0; s < chunk_fns_; ++s) {
            std::vector<ad::Var> sv;
            for (int i = 0; i < m; ++i)
                sv.push_back(tape_.leaf(data_.sensors[s * m + i]));
            sensor_leaves_.push_back(sv);
            mask_leaves_.push_back(tape_.leaf(1.0));
            auto b = nn::mlp_forward(tape_, spec_.branch, branch_params, sv);

            std::vector<ad::Var> tgts;
            ad::Var fn_sum = tape_.constant(0.0);
            for (int q = 0; q < Q; ++q) {
                ad::Var pred = b0;
                const auto& t = trunk_out[static_cast<std::size_t>(q)];
                for (std::size_t k = 0; k < b.size(); ++k)
                    pred = tape_.mul_add(b[k], t[k], pred);
                ad::Var target = tape_.leaf(
                    data_.targets[s * static_cast<std::size_t>(Q) + static_cast<std::size_t>(q)]);
                tgts.push_back(target);
                ad::Var diff = pred - target;
                ad::Var ls = diff * diff;
                sample_losses_.push_back(ls);
                fn_sum = tape_.mul_add(diff, diff, fn_sum);
            }
            target_leaves_.push_back(std::move(tgts));
            acc = tape_.mul_add(mask_leaves_[s], fn_sum, acc);
        }
        chunk_sum_ = acc;
        grad_scratch_.resize(n_params_);
    }

    std::size_t param_count() const override { return n_params_; }

    double eval(std::span<const double> params, std::span<double> grad_out,
                double* max_sample_grad_norm) override {
        if (params.size() != n_params_ || grad_out.size() != n_params_)
            throw UsageError("OperatorLoss: parameter buffer size mismatch");
        for (std::size_t i = 0; i < n_params_; ++i)
            tape_.set_leaf(param_leaves_[i], params[i]);

        std::fill(grad_out.begin(), grad_out.end(), 0.0);
        const std::size_t F = static_cast<std::size_t>(data_.function_count);
        const int Q = data_.queries_per_function;
        const double inv_n = 1.0 / (static_cast<double>(F) * Q);
        double loss = 0.0;

        for (std::size_t c = 0; c < n_chunks_; ++c) {
            if (n_chunks_ > 1 || c == 0)
                bind_chunk(c);
            tape_.replay();
            loss += chunk_sum_.value() * inv_n;
            std::pair<ad::Var, double> seed{chunk_sum_, inv_n};
            auto g = tape_.gradient_multi({&seed, 1}, param_leaves_);
            for (std::size_t i = 0; i < n_params_; ++i)
                grad_out[i] += g[i];

            if (max_sample_grad_norm != nullptr) {
                const std::size_t begin = c * chunk_fns_;
                for (std::size_t s = 0; s < chunk_fns_ && begin + s < F; ++s) {
                    for (int q = 0; q < Q; ++q) {
                        auto gs = tape_.gradient(
                            sample_losses_[s * static_cast<std::size_t>(Q) + q], param_leaves_);
                        double sq = 0.0;
                        for (double v : gs)
                            sq += v * v;
                        *max_sample_grad_norm = std::max(*max_sample_grad_norm, std::sqrt(sq));
                    }
                }
            }
        }
        if (!std::isfinite(loss))
            throw NumericError("OperatorLoss: non-finite loss value");
        for (double g : grad_out)
            if (!std::isfinite(g))
                throw NumericError("OperatorLoss: non-finite gradient");
        return loss;
    }

private:
    void bind_chunk(std::size_t chunk) {
        const std::size_t F = static_cast<std::size_t>(data_.function_count);
        const int m = data_.sensor_count;
        const int Q = data_.queries_per_function;
        const std::size_t begin = chunk * chunk_fns_;
        for (std::size_t s = 0; s < chunk_fns_; ++s) {
            const std::size_t idx = begin + s;
            const bool valid = idx < F;
            const std::size_t src = valid ? idx : F - 1;
            for (int i = 0; i < m; ++i)
                tape_.set_leaf(sensor_leaves_[s][static_cast<std::size_t>(i)],
                               data_.sensors[src * m + i]);
            for (int q = 0; q < Q; ++q)
                tape_.set_leaf(target_leaves_[s][static_cast<std::size_t>(q)],
                               data_.targets[src * static_cast<std::size_t>(Q) + q]);
            tape_.set_leaf(mask_leaves_[s], valid ? 1.0 : 0.0);
        }
    }

    DeepOnetSpec spec_;
    OperatorDataset data_;
    std::size_t n_params_ = 0;
    std::size_t chunk_fns_ = 0;
    std::size_t n_chunks_ = 1;
    ad::Tape tape_;
    std::vector<ad::Var> param_leaves_;
    std::vector<std::vector<ad::Var>> sensor_leaves_;
    std::vector<std::vector<ad::Var>> target_leaves_;
    std::vector<ad::Var> mask_leaves_;
    std::vector<ad::Var> sample_losses_;
    ad::Var chunk_sum_;
    std::vector<double> grad_scratch_;
};

// --- Federated operator problem -----------------------------------------------

enum class OperatorKind { Antiderivative, DiffusionReaction, Burgers };

class OperatorProblem final : public fed::FederatedProblem {
public:
    OperatorProblem(OperatorKind kind, std::string name, int terms, int clients,
                    const OperatorOptions& opts)
        : kind_(kind), name_(std::move(name)), terms_(terms), clients_(clients),
          opts_(opts) {
        if (clients_ < 1 || clients_ > 3)
            throw UsageError("operator problems support 1 to 3 clients");
        if (terms_ < 1 || terms_ > 10)
            throw UsageError("operator problems: active terms must be in [1, 10]");

        sensors_ = SensorGrid::uniform(opts_.sensors, 0.0, 1.0);
        spec_ = make_net_spec();

        const int train_default =
            kind_ == OperatorKind::DiffusionReaction ? 500 : 200;
        const int test_default = kind_ == OperatorKind::Burgers ? 500 : 1000;
        const int train_total =
            opts_.train_functions > 0 ? opts_.train_functions : train_default;
        const int test_total = opts_.test_functions > 0 ? opts_.test_functions : test_default;

        const auto modes = client_modes(clients_);
        int assigned = 0;
        for (int k = 0; k < clients_; ++k) {
            const int count = train_total / clients_ + (k < train_total % clients_ ? 1 : 0);
            data::ChebyshevSpaceSpec space{10, terms_, modes[static_cast<std::size_t>(k)]};
            CounterRng rng(opts_.data_seed, substream("operator-train", static_cast<std::uint64_t>(k)));
            client_data_.push_back(build(space, count, rng, assigned));
            assigned += count;
        }
        union_data_ = OperatorDataset::concat(client_data_);

        data::ChebyshevSpaceSpec full{10, 10, data::ChebyshevMode::Forward};
        CounterRng rng(opts_.data_seed, substream("operator-test"));
        test_data_ = build(full, test_total, rng, assigned);
    }

    const std::string& name() const override { return name_; }
    std::size_t param_count() const override { return spec_.param_count(); }

    std::vector<fed::ParamBlock> param_blocks() const override {
        std::vector<fed::ParamBlock> blocks;
        std::size_t off = 0;
        auto add_net = [&](const nn::MlpSpec& s, const std::string& prefix) {
            for (std::size_t l = 0; l + 1 < s.layer_widths.size(); ++l) {
                const std::size_t n = static_cast<std::size_t>(s.layer_widths[l]) *
                                          s.layer_widths[l + 1] +
                                      s.layer_widths[l + 1];
                blocks.push_back({prefix + "L" + std::to_string(l), off, n});
                off += n;
            }
        };
        add_net(spec_.branch, "branch.");
        add_net(spec_.trunk, "trunk.");
        blocks.push_back({"b0", off, 1});
        return blocks;
    }

    std::vector<double> initial_params(std::uint64_t seed) const override {
        nn::MlpSpec b = spec_.branch;
        b.seed = substream("init-branch", seed);
        nn::MlpSpec t = spec_.trunk;
        t.seed = substream("init-trunk", seed);
        auto flat = nn::init_glorot(b).flatten();
        auto tf = nn::init_glorot(t).flatten();
        flat.insert(flat.end(), tf.begin(), tf.end());
        flat.push_back(0.0); // b0
        return flat;
    }

    std::vector<data::Shard> make_shards(int n, int clients) const override {
        if (n != terms_ || clients != clients_)
            throw UsageError("operator problem was built for n=" + std::to_string(terms_) +
                             ", clients=" + std::to_string(clients_) +
                             "; construct a new problem to change them");
        std::vector<data::Shard> shards;
        for (int k = 0; k < clients_; ++k) {
            const auto& ds = client_data_[static_cast<std::size_t>(k)];
            data::Shard s;
            s.client_id = k;
            s.points.dim = static_cast<std::size_t>(ds.sensor_count);
            s.points.values = ds.sensors;
            s.provenance.method = "chebyshev";
            s.provenance.n = terms_;
            s.provenance.clients = clients_;
            auto [lo, hi] = data::chebyshev_support(
                {10, terms_, client_modes(clients_)[static_cast<std::size_t>(k)]});
            s.provenance.window_lo = lo;
            s.provenance.window_hi = hi;
            shards.push_back(std::move(s));
        }
        return shards;
    }

    std::unique_ptr<fed::ClientLoss> make_loss(const data::Shard& shard) const override {
        const OperatorDataset* ds = nullptr;
        if (shard.client_id >= 0 && shard.client_id < clients_ &&
            shard.points.size() ==
                static_cast<std::size_t>(
                    client_data_[static_cast<std::size_t>(shard.client_id)].function_count)) {
            ds = &client_data_[static_cast<std::size_t>(shard.client_id)];
        } else if (shard.points.size() == static_cast<std::size_t>(union_data_.function_count)) {
            ds = &union_data_; // centralized twin trains on the union
        } else {
            throw UsageError("operator problem: unrecognized shard");
        }
        return std::make_unique<OperatorLoss>(spec_, *ds, opts_.max_chunk_functions);
    }

    double test_error(std::span<const double> flat) const override {
        auto params = DeepOnetParams::from_flat(spec_, flat);
        return operator_error(params, test_data_).mean;
    }

    /// W1 between the clients' pooled sensor-value distributions (1D closed
    /// form), with the mean-pairwise normalization for K >= 3.
    double heterogeneity(std::span<const data::Shard> shards) const override {
        if (shards.size() < 2)
            return 0.0;
        std::vector<ot::DiscreteDistribution> pooled;
        for (const auto& s : shards) {
            data::PointSet values(1);
            values.values = s.points.values; // all sensor readings, flattened
            pooled.push_back(ot::DiscreteDistribution::uniform_over(values));
        }
        if (pooled.size() == 2)
            return ot::w1_1d_closed_form(pooled[0], pooled[1]);
        double sum = 0.0;
        for (std::size_t i = 0; i < pooled.size(); ++i)
            for (std::size_t j = i + 1; j < pooled.size(); ++j)
                sum += ot::w1_1d_closed_form(pooled[i], pooled[j]);
        const double k = static_cast<double>(pooled.size());
        return sum / ((k - 2.0) * (k - 1.0));
    }

    const OperatorDataset& test_data() const { return test_data_; }
    const DeepOnetSpec& spec() const { return spec_; }

private:
    static std::vector<data::ChebyshevMode> client_modes(int clients) {
        switch (clients) {
        case 1: return {data::ChebyshevMode::Forward};
        case 2: return {data::ChebyshevMode::Forward, data::ChebyshevMode::Inverse};
        default:
            return {data::ChebyshevMode::Forward, data::ChebyshevMode::Middle,
                    data::ChebyshevMode::Inverse};
        }
    }

    DeepOnetSpec make_net_spec() const {
        std::vector<int> hidden = opts_.hidden;
        if (hidden.empty()) {
            switch (kind_) {
            case OperatorKind::Antiderivative: hidden = {40, 40}; break;
            case OperatorKind::DiffusionReaction: hidden = {100, 100, 100}; break;
            case OperatorKind::Burgers: hidden = {64, 64}; break;
            }
        }
        const int p = hidden.back();
        DeepOnetSpec spec;
        spec.branch.layer_widths.push_back(opts_.sensors);
        for (int w : hidden)
            spec.branch.layer_widths.push_back(w);
        spec.branch.layer_widths.push_back(p);
        spec.branch.activation = nn::Activation::Relu;
        spec.trunk.layer_widths.push_back(kind_ == OperatorKind::Antiderivative ? 1 : 2);
        for (int w : hidden)
            spec.trunk.layer_widths.push_back(w);
        spec.trunk.layer_widths.push_back(p);
        spec.trunk.activation = nn::Activation::Relu;
        return spec;
    }

    OperatorDataset build(const data::ChebyshevSpaceSpec& space, int count, CounterRng& rng,
                          int first_id) const {
        switch (kind_) {
        case OperatorKind::Antiderivative: {
            const int q = opts_.query_points > 0 ? opts_.query_points : 50;
            std::vector<double> queries(static_cast<std::size_t>(q));
            for (int i = 0; i < q; ++i)
                queries[static_cast<std::size_t>(i)] = static_cast<double>(i) / (q - 1);
            return build_antiderivative_dataset(space, count, sensors_, queries, rng, first_id);
        }
        case OperatorKind::DiffusionReaction:
            return build_dr_dataset(space, count, sensors_, opts_.query_stride, rng, first_id);
        case OperatorKind::Burgers:
            return build_burgers_dataset(space, count, sensors_, opts_.query_stride, rng,
                                         first_id);
        }
        throw UsageError("operator problem: bad kind");
    }

    OperatorKind kind_;
    std::string name_;
    int terms_;
    int clients_;
    OperatorOptions opts_;
    SensorGrid sensors_;
    DeepOnetSpec spec_;
    std::vector<OperatorDataset> client_data_;
    OperatorDataset union_data_;
    OperatorDataset test_data_;
};

} // namespace

std::vector<std::string> operator_problem_names() {
    return {"antiderivative", "dr", "burgers"};
}

std::unique_ptr<fed::FederatedProblem> make_operator_problem(const std::string& name,
                                                             int terms, int clients,
                                                             const OperatorOptions& opts) {
    if (name == "antiderivative")
        return std::make_unique<OperatorProblem>(OperatorKind::Antiderivative, name, terms,
                                                 clients, opts);
    if (name == "dr")
        return std::make_unique<OperatorProblem>(OperatorKind::DiffusionReaction, name, terms,
                                                 clients, opts);
    if (name == "burgers")
        return std::make_unique<OperatorProblem>(OperatorKind::Burgers, name, terms, clients,
                                                 opts);
    throw UsageError("unknown operator problem '" + name + "'");
}

std::vector<CommSweepPoint> communication_sweep(const fed::FederatedProblem& problem,
                                                std::span<const data::Shard> shards,
                                                const fed::FederationConfig& base,
                                                std::span<const int> local_epoch_grid,
                                                int total_iters) {
    if (local_epoch_grid.empty())
        throw UsageError("communication_sweep: empty local-epoch grid");
    for (int e : local_epoch_grid)
        if (e < 1 || total_iters % e != 0)
            throw UsageError("communication_sweep: total iterations must be divisible by " +
                             std::to_string(e));
    std::vector<CommSweepPoint> out;
    for (int e : local_epoch_grid) {
        fed::FederationConfig cfg = base;
        cfg.local_epochs = e;
        cfg.rounds = total_iters / e;
        cfg.metric_every = cfg.rounds; // final error only
        auto run = fed::run_training(problem, shards, cfg);
        CommSweepPoint p;
        p.local_epochs = e;
        p.rounds = cfg.rounds;
        p.final_error = run.metrics.empty() ? problem.test_error(run.params)
                                            : run.metrics.back().server_test_error;
        out.push_back(p);
    }
    return out;
}

} // namespace fedsciml::onet
