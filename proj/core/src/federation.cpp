#include "fedsciml/federation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "fedsciml/wasserstein.hpp"

namespace fedsciml::fed {

const char* client_opt_name(ClientOpt opt) {
    return opt == ClientOpt::Adam ? "adam" : "sgd";
}

ClientOpt client_opt_from_name(const std::string& name) {
    if (name == "adam") return ClientOpt::Adam;
    if (name == "sgd") return ClientOpt::Sgd;
    throw UsageError("unknown client optimizer '" + name + "'");
}

void FederationConfig::validate() const {
    if (clients < 1)
        throw UsageError("federation: clients must be >= 1");
    if (local_epochs < 1)
        throw UsageError("federation: local_epochs must be >= 1");
    if (rounds < 0)
        throw UsageError("federation: rounds must be >= 0");
    if (learning_rate <= 0.0)
        throw UsageError("federation: learning_rate must be positive");
    if (participation != 1.0)
        throw UsageError("federation: only full participation (C = 1.0) is supported");
}

// --- TapeLoss ----------------------------------------------------------------

TapeLoss::TapeLoss(std::size_t param_count, std::vector<double> sample_data,
                   std::size_t sample_dim, const SampleBuilder& per_sample,
                   const SharedBuilder& shared_extra, std::size_t max_chunk)
    : n_params_(param_count), sample_dim_(sample_dim), data_(std::move(sample_data)) {
    if (sample_dim_ == 0 || data_.size() % sample_dim_ != 0)
        throw UsageError("TapeLoss: sample data not a multiple of sample_dim");
    n_samples_ = data_.size() / sample_dim_;
    if (n_samples_ == 0 && !shared_extra)
        throw UsageError("TapeLoss: empty sample set");

    chunk_size_ = (max_chunk == 0 || max_chunk >= n_samples_)
                      ? std::max<std::size_t>(n_samples_, 1)
                      : max_chunk;
    n_chunks_ = n_samples_ == 0 ? 1 : (n_samples_ + chunk_size_ - 1) / chunk_size_;

    param_leaves_.reserve(n_params_);
    for (std::size_t i = 0; i < n_params_; ++i)
        param_leaves_.push_back(tape_.leaf(0.0));

    data_leaves_.reserve(chunk_size_ * sample_dim_);
    mask_leaves_.reserve(chunk_size_);
    for (std::size_t s = 0; s < chunk_size_ && n_samples_ > 0; ++s) {
        for (std::size_t d = 0; d < sample_dim_; ++d)
            data_leaves_.push_back(tape_.leaf(data_[(std::min(s, n_samples_ - 1)) * sample_dim_ + d]));
        mask_leaves_.push_back(tape_.leaf(1.0));
    }

    ad::Var acc = tape_.constant(0.0);
    sample_losses_.reserve(chunk_size_);
    for (std::size_t s = 0; s < chunk_size_ && n_samples_ > 0; ++s) {
        std::span<const ad::Var> sample{data_leaves_.data() + s * sample_dim_, sample_dim_};
        ad::Var ls = per_sample(tape_, param_leaves_, sample);
        sample_losses_.push_back(ls);
        acc = tape_.mul_add(mask_leaves_[s], ls, acc);
    }
    chunk_sum_ = acc;
    if (shared_extra) {
        shared_ = shared_extra(tape_, param_leaves_);
        has_shared_ = true;
    }
    grad_scratch_.resize(n_params_);
}

void TapeLoss::bind_chunk(std::size_t chunk) {
    const std::size_t begin = chunk * chunk_size_;
    for (std::size_t s = 0; s < chunk_size_; ++s) {
        const std::size_t idx = begin + s;
        const bool valid = idx < n_samples_;
        const std::size_t src = valid ? idx : n_samples_ - 1; // pad with last sample
        for (std::size_t d = 0; d < sample_dim_; ++d)
            tape_.set_leaf(data_leaves_[s * sample_dim_ + d], data_[src * sample_dim_ + d]);
        tape_.set_leaf(mask_leaves_[s], valid ? 1.0 : 0.0);
    }
}

double TapeLoss::eval(std::span<const double> params, std::span<double> grad_out,
                      double* max_sample_grad_norm) {
    if (params.size() != n_params_ || grad_out.size() != n_params_)
        throw UsageError("TapeLoss: parameter buffer size mismatch");
    for (std::size_t i = 0; i < n_params_; ++i)
        tape_.set_leaf(param_leaves_[i], params[i]);

    std::fill(grad_out.begin(), grad_out.end(), 0.0);
    double loss = 0.0;
    const double inv_n = n_samples_ > 0 ? 1.0 / static_cast<double>(n_samples_) : 0.0;

    for (std::size_t c = 0; c < n_chunks_; ++c) {
        if (n_samples_ > 0 && (n_chunks_ > 1 || c == 0))
            bind_chunk(c);
        tape_.replay();

        std::vector<std::pair<ad::Var, double>> seeds;
        if (n_samples_ > 0) {
            loss += chunk_sum_.value() * inv_n;
            seeds.emplace_back(chunk_sum_, inv_n);
        }
        if (has_shared_ && c == 0) {
            loss += shared_.value();
            seeds.emplace_back(shared_, 1.0);
        }
        auto g = tape_.gradient_multi(seeds, param_leaves_);
        for (std::size_t i = 0; i < n_params_; ++i)
            grad_out[i] += g[i];

        if (max_sample_grad_norm != nullptr) {
            const std::size_t begin = c * chunk_size_;
            for (std::size_t s = 0; s < chunk_size_ && begin + s < n_samples_; ++s) {
                auto gs = tape_.gradient(sample_losses_[s], param_leaves_);
                double sq = 0.0;
                for (double v : gs)
                    sq += v * v;
                *max_sample_grad_norm = std::max(*max_sample_grad_norm, std::sqrt(sq));
            }
        }
    }

    if (!std::isfinite(loss))
        throw NumericError("TapeLoss: non-finite loss value");
    for (double g : grad_out)
        if (!std::isfinite(g))
            throw NumericError("TapeLoss: non-finite gradient");
    return loss;
}

// --- Heterogeneity ------------------------------------------------------------

double shard_heterogeneity_w1(std::span<const data::Shard> shards,
                              std::size_t subsample_cap, std::uint64_t seed) {
    if (shards.size() < 2)
        throw UsageError("heterogeneity: need at least 2 shards");
    std::vector<ot::DiscreteDistribution> dists;
    dists.reserve(shards.size());
    for (std::size_t k = 0; k < shards.size(); ++k) {
        auto d = ot::DiscreteDistribution::from_shard(shards[k]);
        CounterRng rng(seed, substream("w1-subsample", k));
        dists.push_back(d.subsample(subsample_cap, rng));
    }
    return ot::mean_pairwise_w1(dists);
}

double FederatedProblem::heterogeneity(std::span<const data::Shard> shards) const {
    return shard_heterogeneity_w1(shards);
}

// --- Primitives ----------------------------------------------------------------

std::vector<std::vector<double>> broadcast(std::span<const double> server, int clients) {
    if (clients < 1)
        throw UsageError("broadcast: clients must be >= 1");
    return std::vector<std::vector<double>>(
        static_cast<std::size_t>(clients), std::vector<double>(server.begin(), server.end()));
}

namespace {

std::vector<double> size_weights(std::span<const double> sizes) {
    double total = 0.0;
    for (double s : sizes) {
        if (s < 0.0)
            throw UsageError("aggregate: negative dataset size");
        total += s;
    }
    if (total <= 0.0)
        throw UsageError("aggregate: total dataset size is zero");
    std::vector<double> w(sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k)
        w[k] = sizes[k] / total;
    return w;
}

} // namespace

std::vector<double> aggregate_deltas(std::span<const double> server,
                                     std::span<const std::vector<double>> deltas,
                                     std::span<const double> sizes) {
    if (deltas.empty() || deltas.size() != sizes.size())
        throw UsageError("aggregate: need one size per client");
    for (const auto& d : deltas)
        if (d.size() != server.size())
            throw UsageError("aggregate: shape mismatch");
    const auto w = size_weights(sizes);
    std::vector<double> out(server.begin(), server.end());
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        const double wk = w[k];
        const double* dk = deltas[k].data();
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += wk * dk[i];
    }
    return out;
}

std::vector<double> aggregate_locals(std::span<const double> server,
                                     std::span<const std::vector<double>> locals,
                                     std::span<const double> sizes) {
    if (locals.empty() || locals.size() != sizes.size())
        throw UsageError("aggregate: need one size per client");
    (void)size_weights(sizes); // validates
    if (locals.size() == 1)
        return locals[0]; // single client: the weighted mean is that client
    std::vector<std::vector<double>> deltas;
    deltas.reserve(locals.size());
    for (const auto& lk : locals) {
        if (lk.size() != server.size())
            throw UsageError("aggregate: shape mismatch");
        std::vector<double> d(lk.size());
        for (std::size_t i = 0; i < lk.size(); ++i)
            d[i] = lk[i] - server[i];
        deltas.push_back(std::move(d));
    }
    return aggregate_deltas(server, deltas, sizes);
}

LocalUpdateResult local_update(ClientLoss& loss, std::span<const double> start,
                               int epochs, double learning_rate, ClientOpt opt,
                               nn::AdamState* adam_state, bool track_sample_norms) {
    if (opt == ClientOpt::Adam && adam_state == nullptr)
        throw UsageError("local_update: Adam requires optimizer state");
    LocalUpdateResult result;
    result.params.assign(start.begin(), start.end());
    std::vector<double> grad(start.size());
    double* norm_ptr = track_sample_norms ? &result.max_sample_grad_norm : nullptr;
    for (int e = 0; e < epochs; ++e) {
        result.last_loss = loss.eval(result.params, grad, norm_ptr);
        if (opt == ClientOpt::Adam)
            nn::adam_step(result.params, grad, *adam_state, learning_rate);
        else
            nn::sgd_step(result.params, grad, learning_rate);
    }
    result.delta.resize(start.size());
    for (std::size_t i = 0; i < start.size(); ++i)
        result.delta[i] = result.params[i] - start[i];
    return result;
}

// --- Training loop ---------------------------------------------------------------

namespace {

int resolve_threads(int requested, int clients) {
    if (requested > 0)
        return std::min(requested, clients);
    int cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap <= 0)
        cap = 1;
    if (const char* env = std::getenv("FEDSCIML_THREADS")) {
        const int env_cap = std::atoi(env);
        if (env_cap > 0)
            cap = std::min(cap, env_cap);
    }
    return std::max(1, std::min(cap, clients));
}

} // namespace

TrainingRun run_training(const FederatedProblem& problem,
                         std::span<const data::Shard> shards,
                         const FederationConfig& config, const TrainOptions& opts) {
    config.validate();
    const int K = config.clients;
    if (shards.size() != static_cast<std::size_t>(K))
        throw UsageError("run_training: shard count does not match clients");

    TrainingRun run;
    run.client_opt = config.client_opt;
    run.learning_rate = config.learning_rate;
    run.local_epochs = config.local_epochs;
    run.rounds = config.rounds;
    run.clients = K;

    run.params = problem.initial_params(config.seed);
    if (opts.capture_snapshots)
        run.snapshots.push_back(run.params);

    std::vector<std::unique_ptr<ClientLoss>> losses;
    std::vector<double> sizes;
    losses.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        losses.push_back(problem.make_loss(shards[static_cast<std::size_t>(k)]));
        sizes.push_back(static_cast<double>(shards[static_cast<std::size_t>(k)].points.size()));
    }

    std::vector<nn::AdamState> adam_states;
    if (config.client_opt == ClientOpt::Adam)
        for (int k = 0; k < K; ++k)
            adam_states.push_back(nn::AdamState::init(run.params.size(), config.adam));

    const int threads = resolve_threads(config.threads, K);

    for (int round = 1; round <= config.rounds; ++round) {
        if (config.client_opt == ClientOpt::Adam && config.reset_adam_each_round)
            for (auto& st : adam_states)
                st.reset();

        auto locals = broadcast(run.params, K);
        std::vector<LocalUpdateResult> results(static_cast<std::size_t>(K));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(K));

        auto work = [&](int k) {
            try {
                results[static_cast<std::size_t>(k)] = local_update(
                    *losses[static_cast<std::size_t>(k)], locals[static_cast<std::size_t>(k)],
                    config.local_epochs, config.learning_rate, config.client_opt,
                    adam_states.empty() ? nullptr : &adam_states[static_cast<std::size_t>(k)],
                    opts.track_sample_norms);
            } catch (...) {
                errors[static_cast<std::size_t>(k)] = std::current_exception();
            }
        };

        if (threads <= 1 || K == 1) {
            for (int k = 0; k < K; ++k)
                work(k);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t)
                pool.emplace_back([&, t] {
                    for (int k = t; k < K; k += threads)
                        work(k);
                });
            for (auto& th : pool)
                th.join();
        }
        for (int k = 0; k < K; ++k) {
            if (errors[static_cast<std::size_t>(k)]) {
                try {
                    std::rethrow_exception(errors[static_cast<std::size_t>(k)]);
                } catch (const NumericError& e) {
                    std::ostringstream msg;
                    msg << "round " << round << ", client " << k << ": " << e.what();
                    throw NumericError(msg.str());
                }
            }
        }

        std::vector<std::vector<double>> finals;
        finals.reserve(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            auto& r = results[static_cast<std::size_t>(k)];
            run.max_sample_grad_norm = std::max(run.max_sample_grad_norm, r.max_sample_grad_norm);
            finals.push_back(std::move(r.params));
        }
        run.params = aggregate_locals(run.params, finals, sizes);

        if (opts.capture_snapshots)
            run.snapshots.push_back(run.params);

        const bool metric_round =
            round == config.rounds || config.metric_every <= 1 ||
            round % config.metric_every == 0;
        if (metric_round) {
            RoundMetrics m;
            m.round = round;
            m.server_test_error = problem.test_error(run.params);
            m.secondary_error = problem.secondary_test_error(run.params);
            for (int k = 0; k < K; ++k)
                m.client_losses.push_back(results[static_cast<std::size_t>(k)].last_loss);
            run.metrics.push_back(std::move(m));
        }
    }
    return run;
}

TrainingRun run_centralized_twin(const FederatedProblem& problem,
                                 std::span<const data::Shard> shards,
                                 const FederationConfig& config, const TrainOptions& opts) {
    data::Shard all = data::concat_shards(shards);
    FederationConfig central = config;
    central.clients = 1;
    std::vector<data::Shard> one{std::move(all)};
    return run_training(problem, one, central, opts);
}

std::vector<ExtrapolationResult> run_extrapolation(const FederatedProblem& problem,
                                                   std::span<const data::Shard> shards,
                                                   const FederationConfig& config) {
    std::vector<ExtrapolationResult> out;
    for (const auto& shard : shards) {
        FederationConfig local = config;
        local.clients = 1;
        std::vector<data::Shard> one{shard};
        TrainingRun run = run_training(problem, one, local, {});
        ExtrapolationResult r;
        r.client_id = shard.client_id;
        r.test_error = problem.test_error(run.params);
        r.secondary_error = problem.secondary_test_error(run.params);
        r.final_loss = run.metrics.empty() ? 0.0 : run.metrics.back().client_losses.front();
        out.push_back(std::move(r));
    }
    return out;
}

// --- Divergence -------------------------------------------------------------------

DivergenceEntry weight_divergence(std::span<const double> fed,
                                  std::span<const double> cen,
                                  std::span<const ParamBlock> blocks, int round) {
    if (fed.size() != cen.size())
        throw UsageError("weight_divergence: shape mismatch");
    DivergenceEntry e;
    e.round = round;
    double diff_sq = 0.0, cen_sq = 0.0;
    for (std::size_t i = 0; i < fed.size(); ++i) {
        const double d = fed[i] - cen[i];
        diff_sq += d * d;
        cen_sq += cen[i] * cen[i];
    }
    e.abs_whole = std::sqrt(diff_sq);
    const double cen_norm = std::sqrt(cen_sq);
    e.rel_whole = cen_norm > 1e-12 ? e.abs_whole / cen_norm
                                   : std::numeric_limits<double>::quiet_NaN();
    for (const auto& b : blocks) {
        if (b.offset + b.size > fed.size())
            throw UsageError("weight_divergence: block out of range");
        double dsq = 0.0, csq = 0.0;
        for (std::size_t i = b.offset; i < b.offset + b.size; ++i) {
            const double d = fed[i] - cen[i];
            dsq += d * d;
            csq += cen[i] * cen[i];
        }
        e.abs_layer.push_back(std::sqrt(dsq));
        e.rel_layer.push_back(csq > 1e-24 ? std::sqrt(dsq / csq)
                                          : std::numeric_limits<double>::quiet_NaN());
    }
    return e;
}

DivergenceTrace divergence_trace(const TrainingRun& fed, const TrainingRun& cen,
                                 std::span<const ParamBlock> blocks) {
    if (fed.snapshots.empty() || cen.snapshots.empty())
        throw UsageError("divergence_trace: runs must capture snapshots");
    if (fed.snapshots.size() != cen.snapshots.size())
        throw UsageError("divergence_trace: snapshot counts differ (rounds misaligned)");
    if (fed.local_epochs != cen.local_epochs || fed.learning_rate != cen.learning_rate)
        throw UsageError("divergence_trace: runs trained with different schedules");

    DivergenceTrace trace;
    trace.blocks.assign(blocks.begin(), blocks.end());
    trace.client_opt = fed.client_opt;
    trace.learning_rate = fed.learning_rate;
    trace.local_epochs = fed.local_epochs;
    trace.max_sample_grad_norm =
        std::max(fed.max_sample_grad_norm, cen.max_sample_grad_norm);
    for (std::size_t l = 0; l < fed.snapshots.size(); ++l)
        trace.entries.push_back(weight_divergence(fed.snapshots[l], cen.snapshots[l],
                                                  blocks, static_cast<int>(l)));
    return trace;
}

BoundReport check_divergence_bound(const DivergenceTrace& trace) {
    if (trace.client_opt != ClientOpt::Sgd)
        throw UsageError(
            "check_divergence_bound: the 2*eta*M*E*l bound assumes SGD client updates "
            "with an SGD centralized twin; Adam traces do not satisfy the hypotheses");
    BoundReport report;
    report.m_hat = trace.max_sample_grad_norm;
    report.all_satisfied = true;
    for (const auto& e : trace.entries) {
        BoundCheckRow row;
        row.round = e.round;
        row.observed = e.abs_whole;
        row.bound = 2.0 * trace.learning_rate * report.m_hat * trace.local_epochs * e.round;
        row.margin = row.bound - row.observed;
        row.satisfied = row.observed <= row.bound;
        report.all_satisfied = report.all_satisfied && row.satisfied;
        report.rows.push_back(row);
    }
    return report;
}

} // namespace fedsciml::fed
