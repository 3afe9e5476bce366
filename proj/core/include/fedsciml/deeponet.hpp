#pragma once

#include <memory>

#include "fedsciml/federation.hpp"
#include "fedsciml/mlp.hpp"

namespace fedsciml::onet {

/// Branch and trunk output widths must match (the inner-product width p).
struct DeepOnetSpec {
    nn::MlpSpec branch; // m sensor values -> p
    nn::MlpSpec trunk;  // query coordinate(s) -> p

    void validate() const;
    int p() const { return branch.output_width(); }
    std::size_t param_count() const {
        return branch.param_count() + trunk.param_count() + 1; // + bias b0
    }
};

struct DeepOnetParams {
    nn::MlpParams branch, trunk;
    double bias = 0.0;

    std::vector<double> flatten() const;
    static DeepOnetParams from_flat(const DeepOnetSpec& spec, std::span<const double> flat);
};

/// Sorted distinct sensor locations in the input-function domain.
struct SensorGrid {
    std::vector<double> locations;

    void validate() const;
    static SensorGrid uniform(int count, double lo = 0.0, double hi = 1.0);
};

/// One (input function, query, target) triple.
struct OperatorSample {
    std::vector<double> sensor_values;
    std::vector<double> query;
    double target = 0.0;
    int function_id = 0;
};

/// Dense pairing: every function is paired with every point of a shared
/// query grid. Stored structured so training can share branch and trunk
/// subgraphs.
struct OperatorDataset {
    int sensor_count = 0;
    int query_dim = 1;
    int function_count = 0;
    int queries_per_function = 0;
    std::vector<double> sensors; // function_count x sensor_count
    std::vector<double> queries; // queries_per_function x query_dim
    std::vector<double> targets; // function_count x queries_per_function
    std::vector<int> function_ids;

    std::size_t sample_count() const {
        return static_cast<std::size_t>(function_count) * queries_per_function;
    }
    std::vector<OperatorSample> samples() const;
    static OperatorDataset concat(std::span<const OperatorDataset> parts);
};

/// G(v)(xi) = sum_k b_k(v) t_k(xi) + b0.
double deeponet_forward(const DeepOnetParams& params,
                        std::span<const double> sensor_values,
                        std::span<const double> query);

ad::Var deeponet_forward(ad::Tape& tape, const DeepOnetSpec& spec,
                         std::span<const ad::Var> flat_params,
                         std::span<const ad::Var> sensor_values,
                         std::span<const ad::Var> query);

// --- Dataset builders ---------------------------------------------------------

/// u(x) = integral_0^x v; targets by adaptive RK45 at the query grid.
OperatorDataset build_antiderivative_dataset(const data::ChebyshevSpaceSpec& spec,
                                             int count, const SensorGrid& sensors,
                                             std::span<const double> queries,
                                             CounterRng& rng, int first_function_id = 0);

/// Source-to-solution map of u_t = D u_xx + k u^2 + v(x) (zero IC/BC) on a
/// 101x101 mesh; queries subsample the mesh with the given stride.
OperatorDataset build_dr_dataset(const data::ChebyshevSpaceSpec& spec, int count,
                                 const SensorGrid& sensors, int query_stride,
                                 CounterRng& rng, int first_function_id = 0);

/// Initial-condition-to-solution map of periodic Burgers (nu = 0.1); input
/// functions are periodized as v(x) = p(cos(2 pi x)) with p from the
/// Chebyshev space, keeping the coefficient-window heterogeneity control.
OperatorDataset build_burgers_dataset(const data::ChebyshevSpaceSpec& spec, int count,
                                      const SensorGrid& sensors, int query_stride,
                                      CounterRng& rng, int first_function_id = 0);

/// Mean over test functions of ||u_hat - u||_2 / ||u||_2 on the query grid;
/// zero-norm target functions are skipped and counted.
struct OperatorError {
    double mean = 0.0;
    int skipped = 0;
};
OperatorError operator_error(const DeepOnetParams& params, const OperatorDataset& test);

// --- CSV ------------------------------------------------------------------------

/// One row per sample: function_id, sensor values, query components, target.
void write_operator_csv(const std::string& path, const OperatorDataset& ds);
OperatorDataset read_operator_csv(const std::string& path);

// --- Federated operator problems -------------------------------------------------

struct OperatorOptions {
    int sensors = 50;
    int train_functions = 0; // 0: problem default (200 / 500 / 200)
    int test_functions = 0;  // 0: problem default (1000 / 1000 / 500)
    int query_points = 0;    // antiderivative query-grid size (default 50)
    int query_stride = 5;    // dr/burgers mesh stride
    std::vector<int> hidden; // hidden widths for both nets
    std::uint64_t data_seed = 7;
    std::size_t max_chunk_functions = 0; // 0: all functions in one chunk
};

/// Known names: antiderivative, dr, burgers. The heterogeneity control `n`
/// (active Chebyshev terms) and the client count fix the per-client function
/// spaces: forward/inverse for two clients, forward/middle/inverse for
/// three. Heterogeneity is reported as the W1 distance between the clients'
/// pooled sensor-value distributions.
std::unique_ptr<fed::FederatedProblem> make_operator_problem(const std::string& name,
                                                             int terms, int clients,
                                                             const OperatorOptions& opts = {});

std::vector<std::string> operator_problem_names();

// --- Communication-frequency sweep ------------------------------------------------

struct CommSweepPoint {
    int local_epochs = 0;
    int rounds = 0;
    double final_error = 0.0;
};

/// Re-runs federated training for each E with rounds = total_iters / E and
/// identical seeds and data. total_iters must be divisible by every E.
std::vector<CommSweepPoint> communication_sweep(const fed::FederatedProblem& problem,
                                                std::span<const data::Shard> shards,
                                                const fed::FederationConfig& base,
                                                std::span<const int> local_epoch_grid,
                                                int total_iters);

} // namespace fedsciml::onet
