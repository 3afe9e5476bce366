#include <doctest.h>

#include <cmath>

#include "fedsciml/federation.hpp"

using namespace fedsciml;
using fed::ClientOpt;
using fed::FederationConfig;

namespace {

// Minimal 1-parameter test problem: client loss is the MSE of theta against
// the shard's labels, i.e. mean (theta - c_i)^2.
class QuadraticProblem final : public fed::FederatedProblem {
public:
    explicit QuadraticProblem(std::vector<std::vector<double>> client_labels)
        : name_("quadratic"), client_labels_(std::move(client_labels)) {}

    const std::string& name() const override { return name_; }
    std::size_t param_count() const override { return 1; }
    std::vector<fed::ParamBlock> param_blocks() const override {
        return {{"theta", 0, 1}};
    }
    std::vector<double> initial_params(std::uint64_t) const override { return {0.0}; }

    std::vector<data::Shard> make_shards(int, int clients) const override {
        if (clients != static_cast<int>(client_labels_.size()))
            throw UsageError("quadratic: bad client count");
        std::vector<data::Shard> shards;
        for (int k = 0; k < clients; ++k) {
            data::Shard s;
            s.client_id = k;
            s.points.dim = 1;
            for (double c : client_labels_[static_cast<std::size_t>(k)])
                s.points.push_back(c);
            s.labels = client_labels_[static_cast<std::size_t>(k)];
            shards.push_back(std::move(s));
        }
        return shards;
    }

    std::unique_ptr<fed::ClientLoss> make_loss(const data::Shard& shard) const override {
        std::vector<double> rows(*shard.labels);
        auto per_sample = [](ad::Tape& t, std::span<const ad::Var> params,
                             std::span<const ad::Var> sample) {
            ad::Var d = params[0] - sample[0];
            return d * d;
        };
        return std::make_unique<fed::TapeLoss>(1, std::move(rows), 1, per_sample);
    }

    double test_error(std::span<const double> params) const override {
        double mean = 0.0;
        std::size_t n = 0;
        for (const auto& labels : client_labels_)
            for (double c : labels) {
                mean += c;
                ++n;
            }
        mean /= static_cast<double>(n);
        return std::fabs(params[0] - mean);
    }

private:
    std::string name_;
    std::vector<std::vector<double>> client_labels_;
};

FederationConfig sgd_config(int clients, int epochs, int rounds, double lr) {
    FederationConfig cfg;
    cfg.clients = clients;
    cfg.local_epochs = epochs;
    cfg.rounds = rounds;
    cfg.learning_rate = lr;
    cfg.client_opt = ClientOpt::Sgd;
    return cfg;
}

} // namespace

TEST_CASE("broadcast copies the server bitwise") {
    std::vector<double> server{0.1, -2.5, 3.75};
    auto locals = fed::broadcast(server, 3);
    REQUIRE(locals.size() == 3);
    for (const auto& l : locals)
        CHECK(l == server);
    auto one = fed::broadcast(server, 1);
    CHECK(one[0] == server);
    CHECK_THROWS_AS((void)fed::broadcast(server, 0), UsageError);
}

TEST_CASE("aggregate: round-trip identity and averaging") {
    std::vector<double> server{0.1, 0.2, 0.3};

    // zero local steps: locals identical to server -> unchanged bitwise
    std::vector<std::vector<double>> same{server, server, server};
    std::vector<double> odd_sizes{1.0, 2.0, 4.0};
    CHECK(fed::aggregate_locals(server, same, odd_sizes) == server);

    // zero deltas -> unchanged bitwise
    std::vector<std::vector<double>> zeros{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    CHECK(fed::aggregate_deltas(server, zeros, odd_sizes) == server);

    // K=2 equal sizes, theta = 0 and 2 -> 1
    std::vector<double> s0{0.0};
    std::vector<std::vector<double>> pair{{0.0}, {2.0}};
    std::vector<double> eq{5.0, 5.0};
    CHECK(fed::aggregate_locals(s0, pair, eq)[0] == 1.0);

    // single client: aggregate returns that client's params exactly
    std::vector<std::vector<double>> solo{{0.123456789}};
    std::vector<double> one{17.0};
    CHECK(fed::aggregate_locals(server, {{{0.1, 0.2, 0.4}}}, one) ==
          std::vector<double>{0.1, 0.2, 0.4});
    (void)solo;

    std::vector<double> zero_sizes{0.0, 0.0};
    CHECK_THROWS_AS((void)fed::aggregate_locals(s0, pair, zero_sizes), UsageError);
}

TEST_CASE("delta form and local form agree bitwise under the same accumulation") {
    std::vector<double> server{0.37, -1.25, 0.001};
    std::vector<std::vector<double>> locals{{0.5, -1.0, 0.25}, {-0.25, 2.0, 0.125}};
    std::vector<double> sizes{3.0, 1.0};
    std::vector<std::vector<double>> deltas;
    for (const auto& l : locals) {
        std::vector<double> d(l.size());
        for (std::size_t i = 0; i < l.size(); ++i)
            d[i] = l[i] - server[i];
        deltas.push_back(std::move(d));
    }
    CHECK(fed::aggregate_locals(server, locals, sizes) ==
          fed::aggregate_deltas(server, deltas, sizes));
}

TEST_CASE("local_update: spec examples") {
    QuadraticProblem problem{{{1.0}}};
    auto shards = problem.make_shards(1, 1);
    auto loss = problem.make_loss(shards[0]);

    // sgd on (theta-1)^2 from 0, eta=0.1, one epoch: g=-2, delta = +0.2
    std::vector<double> start{0.0};
    auto r = fed::local_update(*loss, start, 1, 0.1, ClientOpt::Sgd, nullptr, false);
    CHECK(r.delta[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(r.params[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(r.last_loss == doctest::Approx(1.0).epsilon(1e-15));

    // zero gradient (already at the minimum): delta = 0
    std::vector<double> at_min{1.0};
    auto r0 = fed::local_update(*loss, at_min, 5, 0.1, ClientOpt::Sgd, nullptr, false);
    CHECK(r0.delta[0] == 0.0);

    // adam, constant gradient direction, first step ~ -eta * sign(g)
    QuadraticProblem down{{{-1e9}}}; // gradient ~ 2e9, constant sign
    auto dshards = down.make_shards(1, 1);
    auto dloss = down.make_loss(dshards[0]);
    auto state = nn::AdamState::init(1);
    std::vector<double> s{0.0};
    auto ra = fed::local_update(*dloss, s, 1, 1e-3, ClientOpt::Adam, &state, false);
    CHECK(ra.delta[0] == doctest::Approx(-1e-3).epsilon(1e-6));

    CHECK_THROWS_AS(
        (void)fed::local_update(*loss, start, 1, 0.1, ClientOpt::Adam, nullptr, false),
        UsageError);
}

TEST_CASE("run_training: rounds=0 returns initial params; snapshots count") {
    QuadraticProblem problem{{{0.0}, {2.0}}};
    auto shards = problem.make_shards(2, 2);
    auto cfg = sgd_config(2, 2, 0, 0.1);
    auto run = fed::run_training(problem, shards, cfg);
    CHECK(run.params == std::vector<double>{0.0});

    cfg.rounds = 4;
    fed::TrainOptions opts;
    opts.capture_snapshots = true;
    auto run4 = fed::run_training(problem, shards, cfg, opts);
    CHECK(run4.snapshots.size() == 5); // init + one per round
    CHECK(run4.snapshots[0] == std::vector<double>{0.0});
    CHECK(run4.metrics.size() == 4);
}

TEST_CASE("hand-computed two-client SGD round matches the framework") {
    // Clients hold {0} and {2}; eta = 0.1, E = 2, equal sizes.
    // Client 1 stays at 0. Client 2: 0 -> 0.4 -> 0.72. Server: 0.36.
    // Centralized on {0,2}: g = 2 theta - 2: 0 -> 0.2 -> 0.36.
    QuadraticProblem problem{{{0.0}, {2.0}}};
    auto shards = problem.make_shards(2, 2);
    auto cfg = sgd_config(2, 2, 1, 0.1);
    fed::TrainOptions opts;
    opts.capture_snapshots = true;
    opts.track_sample_norms = true;

    auto fedrun = fed::run_training(problem, shards, cfg, opts);
    CHECK(fedrun.params[0] == doctest::Approx(0.36).epsilon(1e-15));

    auto cen = fed::run_centralized_twin(problem, shards, cfg, opts);
    CHECK(cen.params[0] == doctest::Approx(0.36).epsilon(1e-15));

    // max per-sample gradient norm: |2 (0 - 2)| = 4 at the shared init
    CHECK(std::max(fedrun.max_sample_grad_norm, cen.max_sample_grad_norm) ==
          doctest::Approx(4.0).epsilon(1e-15));

    auto blocks = problem.param_blocks();
    auto trace = fed::divergence_trace(fedrun, cen, blocks);
    REQUIRE(trace.entries.size() == 2);
    CHECK(trace.entries[0].abs_whole == 0.0); // same init
    auto report = fed::check_divergence_bound(trace);
    CHECK(report.m_hat == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(report.rows[1].bound == doctest::Approx(2.0 * 0.1 * 4.0 * 2.0).epsilon(1e-12));
    CHECK(report.all_satisfied);
}

TEST_CASE("bound check refuses Adam traces") {
    QuadraticProblem problem{{{0.0}, {2.0}}};
    auto shards = problem.make_shards(2, 2);
    auto cfg = sgd_config(2, 2, 2, 0.01);
    cfg.client_opt = ClientOpt::Adam;
    fed::TrainOptions opts;
    opts.capture_snapshots = true;
    opts.track_sample_norms = true;
    auto fedrun = fed::run_training(problem, shards, cfg, opts);
    auto cen = fed::run_centralized_twin(problem, shards, cfg, opts);
    auto trace = fed::divergence_trace(fedrun, cen, problem.param_blocks());
    CHECK_THROWS_AS((void)fed::check_divergence_bound(trace), UsageError);
}

TEST_CASE("single-client degeneracy is bitwise for both optimizers") {
    QuadraticProblem problem{{{0.0, 1.0, 2.0, 5.0}}};
    auto shards = problem.make_shards(1, 1);
    for (auto opt : {ClientOpt::Sgd, ClientOpt::Adam}) {
        // federated: 3 rounds x 4 local epochs; centralized: 1 round x 12
        auto cfg_fed = sgd_config(1, 4, 3, 0.05);
        cfg_fed.client_opt = opt;
        auto cfg_cen = sgd_config(1, 12, 1, 0.05);
        cfg_cen.client_opt = opt;
        auto fedrun = fed::run_training(problem, shards, cfg_fed);
        auto cenrun = fed::run_training(problem, shards, cfg_cen);
        CHECK(fedrun.params == cenrun.params); // bitwise
    }
}

TEST_CASE("adam reset ablation changes the trajectory") {
    QuadraticProblem problem{{{0.0, 4.0}}};
    auto shards = problem.make_shards(1, 1);
    auto cfg = sgd_config(1, 3, 4, 0.01);
    cfg.client_opt = ClientOpt::Adam;
    auto persistent = fed::run_training(problem, shards, cfg);
    cfg.reset_adam_each_round = true;
    auto reset = fed::run_training(problem, shards, cfg);
    CHECK(persistent.params != reset.params);
}

TEST_CASE("results are identical across thread schedules") {
    QuadraticProblem problem{{{0.0}, {1.0}, {2.0}, {3.0}}};
    auto shards = problem.make_shards(4, 4);
    auto cfg = sgd_config(4, 3, 5, 0.05);
    cfg.threads = 1;
    auto serial = fed::run_training(problem, shards, cfg);
    cfg.threads = 4;
    auto parallel = fed::run_training(problem, shards, cfg);
    CHECK(serial.params == parallel.params);
}

TEST_CASE("weight divergence entries") {
    std::vector<fed::ParamBlock> blocks{{"a", 0, 2}, {"b", 2, 2}};
    std::vector<double> cen{1.0, 1.0, 1.0, 1.0};
    std::vector<double> same{cen};
    auto zero = fed::weight_divergence(same, cen, blocks);
    CHECK(zero.abs_whole == 0.0);
    CHECK(zero.rel_whole == 0.0);

    std::vector<double> shifted{4.0, 1.0, 1.0, 1.0}; // + 3 e_1
    auto d = fed::weight_divergence(shifted, cen, blocks);
    CHECK(d.abs_whole == 3.0);
    CHECK(d.rel_whole == doctest::Approx(1.5).epsilon(1e-15)); // 3 / ||cen|| = 3/2
    CHECK(d.abs_layer[0] == 3.0);
    CHECK(d.abs_layer[1] == 0.0);

    // Pythagorean identity across disjoint blocks
    std::vector<double> mixed{1.5, 0.5, 2.0, 0.0};
    auto m = fed::weight_divergence(mixed, cen, blocks);
    double sq = 0.0;
    for (double l : m.abs_layer)
        sq += l * l;
    CHECK(std::sqrt(sq) == doctest::Approx(m.abs_whole).epsilon(1e-12));
}

TEST_CASE("config validation") {
    FederationConfig cfg;
    cfg.clients = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.clients = 2;
    cfg.local_epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.local_epochs = 1;
    cfg.participation = 0.5;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.participation = 1.0;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.learning_rate = 1e-3;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("non-finite training aborts with a diagnostic") {
    QuadraticProblem problem{{{1.0}}};
    auto shards = problem.make_shards(1, 1);
    auto cfg = sgd_config(1, 50, 8, 1e7); // wildly unstable step size
    CHECK_THROWS_AS((void)fed::run_training(problem, shards, cfg), NumericError);
}
