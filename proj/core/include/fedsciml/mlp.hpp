#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedsciml/autodiff.hpp"

namespace fedsciml::nn {

enum class Activation : std::uint32_t { Tanh = 0, Sin = 1, Relu = 2 };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct MlpSpec {
    std::vector<int> layer_widths; // input, hidden..., output
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;

    void validate() const; // >= 2 layers, widths >= 1
    std::size_t param_count() const;
    int input_width() const { return layer_widths.front(); }
    int output_width() const { return layer_widths.back(); }
};

/// Dense network weights. Flatten order is layer by layer, weights (row-major
/// [out][in]) followed by biases; flatten/unflatten round-trips bit-exactly.
struct MlpParams {
    struct Layer {
        int in = 0, out = 0;
        std::vector<double> w; // out x in, row-major
        std::vector<double> b; // out
    };
    std::vector<Layer> layers;
    Activation activation = Activation::Tanh;

    static MlpParams zeros(const MlpSpec& spec);
    std::size_t param_count() const;
    std::vector<double> flatten() const;
    void write_flat(std::span<double> out) const;
    void read_flat(std::span<const double> in);
    static MlpParams from_flat(const MlpSpec& spec, std::span<const double> flat);
    MlpSpec spec() const;
};

/// Glorot-uniform weights, zero biases, drawn from the counter-based RNG
/// seeded by spec.seed: identical seed gives bitwise-identical params.
MlpParams init_glorot(const MlpSpec& spec);

/// Forward pass recorded on the tape. `params` are leaves (or any Vars) in
/// flatten order; hidden layers get the activation, the output layer is
/// linear.
std::vector<ad::Var> mlp_forward(ad::Tape& tape, const MlpSpec& spec,
                                 std::span<const ad::Var> params,
                                 std::span<const ad::Var> x);

/// Tape-free evaluation used for metrics and oracles.
std::vector<double> mlp_forward_values(const MlpParams& params, std::span<const double> x);

/// Creates one leaf per parameter, in flatten order.
std::vector<ad::Var> lift(ad::Tape& tape, std::span<const double> flat);

/// (1/N) sum (pred - target)^2
ad::Var mse_loss(ad::Tape& tape, std::span<const ad::Var> preds,
                 std::span<const double> targets);

// Checkpoint format: little-endian header (magic "FSML", version, activation
// id, layer count, widths) followed by the flat float64 parameter array.
void save_params(std::ostream& os, const MlpParams& params);
MlpParams load_params(std::istream& is);
void save_params_file(const std::string& path, const MlpParams& params);
MlpParams load_params_file(const std::string& path);

} // namespace fedsciml::nn
