#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsciml/autodiff.hpp"
#include "fedsciml/optim.hpp"
#include "fedsciml/shard.hpp"

namespace fedsciml::fed {

enum class ClientOpt { Adam, Sgd };

const char* client_opt_name(ClientOpt opt);
ClientOpt client_opt_from_name(const std::string& name);

struct FederationConfig {
    int clients = 2;        // K
    int local_epochs = 5;   // E; one epoch = one full-batch gradient step
    int rounds = 1;         // global epochs l
    double learning_rate = 1e-3;
    ClientOpt client_opt = ClientOpt::Adam;
    double participation = 1.0; // fixed: every client participates each round
    std::uint64_t seed = 0;
    nn::AdamConfig adam;

    // Client Adam moments persist across rounds by default; the broadcast
    // only overwrites parameters. This keeps a K=1 federated run bitwise
    // identical to an uninterrupted centralized run. reset_adam_each_round
    // restores the ablation where moments are cleared at every broadcast.
    bool reset_adam_each_round = false;

    int threads = 0;      // 0: min(K, hardware, FEDSCIML_THREADS)
    int metric_every = 1; // test-error cadence in rounds (final round always)

    void validate() const;
};

/// Named contiguous block of the flat parameter vector (one per layer).
struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// A client's full-batch training objective. Implementations own their
/// recorded tape(s) and scratch; instances are not shared across threads.
class ClientLoss {
public:
    virtual ~ClientLoss() = default;
    virtual std::size_t param_count() const = 0;

    /// Evaluates loss and gradient at `params`. When `max_sample_grad_norm`
    /// is non-null, also records max_i ||grad of the i-th per-sample loss||
    /// at these params (Assumption-1 style bookkeeping for the divergence
    /// bound).
    virtual double eval(std::span<const double> params, std::span<double> grad_out,
                        double* max_sample_grad_norm) = 0;
};

/// Generic tape-backed loss: mean of per-sample losses over the shard data
/// plus an optional shared term (e.g. replicated PDE residual points). The
/// graph is recorded once and replayed every step; large sample sets are
/// split into equal-size chunks bound to the same data leaves.
class TapeLoss : public ClientLoss {
public:
    using SampleBuilder = std::function<ad::Var(
        ad::Tape&, std::span<const ad::Var> params, std::span<const ad::Var> sample)>;
    using SharedBuilder =
        std::function<ad::Var(ad::Tape&, std::span<const ad::Var> params)>;

    /// sample_data: sample_count x sample_dim, row-major. max_chunk = 0 puts
    /// all samples in one chunk.
    TapeLoss(std::size_t param_count, std::vector<double> sample_data,
             std::size_t sample_dim, const SampleBuilder& per_sample,
             const SharedBuilder& shared_extra = nullptr, std::size_t max_chunk = 0);

    std::size_t param_count() const override { return n_params_; }
    double eval(std::span<const double> params, std::span<double> grad_out,
                double* max_sample_grad_norm) override;

private:
    void bind_chunk(std::size_t chunk);

    std::size_t n_params_ = 0;
    std::size_t n_samples_ = 0;
    std::size_t sample_dim_ = 0;
    std::size_t chunk_size_ = 0;
    std::size_t n_chunks_ = 1;
    std::vector<double> data_;

    ad::Tape tape_;
    std::vector<ad::Var> param_leaves_;
    std::vector<ad::Var> data_leaves_;
    std::vector<ad::Var> mask_leaves_;
    std::vector<ad::Var> sample_losses_;
    ad::Var chunk_sum_;
    ad::Var shared_;
    bool has_shared_ = false;
    std::vector<double> grad_scratch_;
};

/// A training task binding model, loss, data generation, and test metric;
/// regression, PINN, and operator problems all implement this surface so the
/// federation loop stays generic over a flat parameter vector.
class FederatedProblem {
public:
    virtual ~FederatedProblem() = default;
    virtual const std::string& name() const = 0;
    virtual std::size_t param_count() const = 0;
    virtual std::vector<ParamBlock> param_blocks() const = 0;
    virtual std::vector<double> initial_params(std::uint64_t seed) const = 0;

    /// n is the heterogeneity control: total subdomain count for partitioned
    /// problems, active Chebyshev terms for operator problems.
    virtual std::vector<data::Shard> make_shards(int n, int clients) const = 0;

    virtual std::unique_ptr<ClientLoss> make_loss(const data::Shard& shard) const = 0;

    /// L2 relative error of the model against the problem's reference.
    virtual double test_error(std::span<const double> params) const = 0;
    /// Second metric for inverse problems (e.g. the inferred k(x)).
    virtual std::optional<double> secondary_test_error(std::span<const double>) const {
        return std::nullopt;
    }

    /// W1 (K=2) or mean pairwise W1 (K>=3) between the client shards.
    virtual double heterogeneity(std::span<const data::Shard> shards) const;
};

/// Shared default: EMD between shard point clouds with a subsample cap.
double shard_heterogeneity_w1(std::span<const data::Shard> shards,
                              std::size_t subsample_cap = 1024,
                              std::uint64_t seed = 0);

// --- Federation primitives ---------------------------------------------------

/// Exact copies of the server parameters, one per client.
std::vector<std::vector<double>> broadcast(std::span<const double> server, int clients);

/// theta^{l+1} = theta^l + sum_k (N_k / N) Delta_k, reduced in ascending
/// client order. The locals overload computes Delta_k = theta_k - server and
/// uses the same accumulation; with a single client it returns that client's
/// parameters exactly.
std::vector<double> aggregate_deltas(std::span<const double> server,
                                     std::span<const std::vector<double>> deltas,
                                     std::span<const double> sizes);
std::vector<double> aggregate_locals(std::span<const double> server,
                                     std::span<const std::vector<double>> locals,
                                     std::span<const double> sizes);

struct LocalUpdateResult {
    std::vector<double> params;  // theta_k^{l,E}
    std::vector<double> delta;   // theta_k^{l,E} - theta_k^{l,0}
    double last_loss = 0.0;
    double max_sample_grad_norm = 0.0;
};

/// E full-batch optimizer steps on the client's own loss. `adam_state` is
/// required for ClientOpt::Adam and carries over between calls.
LocalUpdateResult local_update(ClientLoss& loss, std::span<const double> start,
                               int epochs, double learning_rate, ClientOpt opt,
                               nn::AdamState* adam_state, bool track_sample_norms);

// --- Training runs -----------------------------------------------------------

struct RoundMetrics {
    int round = 0; // 1-based; metrics refer to the aggregated server model
    double server_test_error = 0.0;
    std::optional<double> secondary_error;
    std::vector<double> client_losses; // last local-step loss per client
};

struct TrainingRun {
    std::vector<double> params;
    std::vector<RoundMetrics> metrics;
    std::vector<std::vector<double>> snapshots; // [0] = init, [l] = after round l
    double max_sample_grad_norm = 0.0;
    ClientOpt client_opt = ClientOpt::Adam;
    double learning_rate = 0.0;
    int local_epochs = 0;
    int rounds = 0;
    int clients = 0;
};

struct TrainOptions {
    bool capture_snapshots = false;
    bool track_sample_norms = false;
};

/// rounds x (broadcast -> parallel local updates -> aggregate). Client order
/// fixes all reductions, so results are identical across schedules.
TrainingRun run_training(const FederatedProblem& problem,
                         std::span<const data::Shard> shards,
                         const FederationConfig& config, const TrainOptions& opts = {});

/// Trains on the union of the shards for rounds * E epochs with the same
/// seed and init; snapshots align with federated round boundaries.
TrainingRun run_centralized_twin(const FederatedProblem& problem,
                                 std::span<const data::Shard> shards,
                                 const FederationConfig& config,
                                 const TrainOptions& opts = {});

struct ExtrapolationResult {
    int client_id = 0;
    double test_error = 0.0;
    std::optional<double> secondary_error;
    double final_loss = 0.0;
};

/// Per-client local-only baselines: same budget and init, no aggregation,
/// each client evaluated on the global reference.
std::vector<ExtrapolationResult> run_extrapolation(const FederatedProblem& problem,
                                                   std::span<const data::Shard> shards,
                                                   const FederationConfig& config);

// --- Weight divergence --------------------------------------------------------

struct DivergenceEntry {
    int round = 0;
    double abs_whole = 0.0;
    double rel_whole = 0.0;
    std::vector<double> abs_layer, rel_layer;
};

/// Euclidean norms over the flattened difference, whole model and per block.
/// Relative values divide by the centralized norm and are NaN when that norm
/// is below 1e-12.
DivergenceEntry weight_divergence(std::span<const double> fed,
                                  std::span<const double> cen,
                                  std::span<const ParamBlock> blocks, int round = 0);

struct DivergenceTrace {
    std::vector<DivergenceEntry> entries; // rounds 0..l
    double max_sample_grad_norm = 0.0;    // M-hat across both runs
    ClientOpt client_opt = ClientOpt::Sgd;
    double learning_rate = 0.0;
    int local_epochs = 0;
    std::vector<ParamBlock> blocks;
};

/// Aligns federated snapshots with centralized twin snapshots round by round.
DivergenceTrace divergence_trace(const TrainingRun& fed, const TrainingRun& cen,
                                 std::span<const ParamBlock> blocks);

struct BoundCheckRow {
    int round = 0;
    double observed = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool satisfied = false;
};

struct BoundReport {
    std::vector<BoundCheckRow> rows;
    double m_hat = 0.0;
    bool all_satisfied = false;
};

/// Checks observed divergence <= 2 * eta * M-hat * E * l at every recorded
/// round. Refuses traces from Adam clients: the bound's hypotheses cover
/// SGD updates only.
BoundReport check_divergence_bound(const DivergenceTrace& trace);

} // namespace fedsciml::fed
