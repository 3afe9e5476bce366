#include "fedsciml/optim.hpp"

#include <cmath>

namespace fedsciml::nn {

AdamState AdamState::init(std::size_t n, AdamConfig cfg) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.t = 0;
    s.cfg = cfg;
    return s;
}

void AdamState::reset() {
    std::fill(m.begin(), m.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    t = 0;
}

namespace {
void check_grads(std::span<const double> grads) {
    for (double g : grads)
        if (!std::isfinite(g))
            throw NumericError("optimizer: non-finite gradient");
}
} // namespace

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr) {
    if (params.size() != grads.size() || state.m.size() != params.size())
        throw UsageError("adam_step: shape mismatch");
    check_grads(grads);

    state.t += 1;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != grads.size())
        throw UsageError("sgd_step: shape mismatch");
    check_grads(grads);
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i] -= lr * grads[i];
}

std::vector<double> combine(std::span<const std::vector<double>> params_list,
                            std::span<const double> weights) {
    if (params_list.empty() || params_list.size() != weights.size())
        throw UsageError("combine: need one weight per parameter vector");
    double wsum = 0.0;
    for (double w : weights)
        wsum += w;
    if (std::fabs(wsum - 1.0) > 1e-12)
        throw UsageError("combine: weights must sum to 1");
    const std::size_t n = params_list.front().size();
    for (const auto& p : params_list)
        if (p.size() != n)
            throw UsageError("combine: shape mismatch");

    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < params_list.size(); ++k) {
        const double w = weights[k];
        const double* src = params_list[k].data();
        for (std::size_t i = 0; i < n; ++i)
            out[i] += w * src[i];
    }
    return out;
}

MlpParams combine(std::span<const MlpParams> params_list, std::span<const double> weights) {
    if (params_list.empty())
        throw UsageError("combine: empty list");
    std::vector<std::vector<double>> flats;
    flats.reserve(params_list.size());
    for (const auto& p : params_list)
        flats.push_back(p.flatten());
    std::vector<double> out = combine(flats, weights);
    MlpParams result = params_list.front();
    result.read_flat(out);
    return result;
}

} // namespace fedsciml::nn
