#pragma once

#include <span>
#include <vector>

#include "fedsciml/mlp.hpp"

namespace fedsciml::nn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m, v; // first/second moments, zero-initialized
    long t = 0;
    AdamConfig cfg;

    static AdamState init(std::size_t n, AdamConfig cfg = {});
    void reset();
};

/// Standard Adam with bias correction:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  t <- t+1
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// A non-finite gradient raises NumericError and leaves params and state
/// untouched.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr);

/// theta <- theta - lr * g; non-finite gradient raises NumericError.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

/// Element-wise weighted sum of flat parameter vectors, accumulated in list
/// order. Weights must sum to 1 within 1e-12.
std::vector<double> combine(std::span<const std::vector<double>> params_list,
                            std::span<const double> weights);

MlpParams combine(std::span<const MlpParams> params_list, std::span<const double> weights);

} // namespace fedsciml::nn
