#include "fedsciml/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fedsciml/rng.hpp"

namespace fedsciml::nn {

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sin: return "sin";
    case Activation::Relu: return "relu";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "sin" || name == "sine") return Activation::Sin;
    if (name == "relu") return Activation::Relu;
    throw UsageError("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
    if (layer_widths.size() < 2)
        throw UsageError("MlpSpec: need at least input and output layers");
    for (int w : layer_widths)
        if (w < 1)
            throw UsageError("MlpSpec: layer widths must be >= 1");
}

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l)
        n += static_cast<std::size_t>(layer_widths[l + 1]) * layer_widths[l] + layer_widths[l + 1];
    return n;
}

MlpParams MlpParams::zeros(const MlpSpec& spec) {
    spec.validate();
    MlpParams p;
    p.activation = spec.activation;
    for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
        Layer layer;
        layer.in = spec.layer_widths[l];
        layer.out = spec.layer_widths[l + 1];
        layer.w.assign(static_cast<std::size_t>(layer.in) * layer.out, 0.0);
        layer.b.assign(layer.out, 0.0);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

std::size_t MlpParams::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers)
        n += l.w.size() + l.b.size();
    return n;
}

std::vector<double> MlpParams::flatten() const {
    std::vector<double> out(param_count());
    write_flat(out);
    return out;
}

void MlpParams::write_flat(std::span<double> out) const {
    if (out.size() != param_count())
        throw UsageError("MlpParams: flat buffer size mismatch");
    std::size_t k = 0;
    for (const Layer& l : layers) {
        std::memcpy(out.data() + k, l.w.data(), l.w.size() * sizeof(double));
        k += l.w.size();
        std::memcpy(out.data() + k, l.b.data(), l.b.size() * sizeof(double));
        k += l.b.size();
    }
}

void MlpParams::read_flat(std::span<const double> in) {
    if (in.size() != param_count())
        throw UsageError("MlpParams: flat buffer size mismatch");
    std::size_t k = 0;
    for (Layer& l : layers) {
        std::memcpy(l.w.data(), in.data() + k, l.w.size() * sizeof(double));
        k += l.w.size();
        std::memcpy(l.b.data(), in.data() + k, l.b.size() * sizeof(double));
        k += l.b.size();
    }
}

MlpParams MlpParams::from_flat(const MlpSpec& spec, std::span<const double> flat) {
    MlpParams p = zeros(spec);
    p.read_flat(flat);
    return p;
}

MlpSpec MlpParams::spec() const {
    MlpSpec s;
    s.activation = activation;
    if (!layers.empty()) {
        s.layer_widths.push_back(layers.front().in);
        for (const Layer& l : layers)
            s.layer_widths.push_back(l.out);
    }
    return s;
}

MlpParams init_glorot(const MlpSpec& spec) {
    spec.validate();
    MlpParams p = MlpParams::zeros(spec);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        const double bound = std::sqrt(6.0 / (layer.in + layer.out));
        CounterRng rng(spec.seed, substream("glorot", l));
        for (double& w : layer.w)
            w = rng.uniform(-bound, bound);
        // biases stay 0
    }
    return p;
}

std::vector<ad::Var> lift(ad::Tape& tape, std::span<const double> flat) {
    std::vector<ad::Var> leaves;
    leaves.reserve(flat.size());
    for (double v : flat)
        leaves.push_back(tape.leaf(v));
    return leaves;
}

std::vector<ad::Var> mlp_forward(ad::Tape& tape, const MlpSpec& spec,
                                 std::span<const ad::Var> params,
                                 std::span<const ad::Var> x) {
    spec.validate();
    if (params.size() != spec.param_count())
        throw UsageError("mlp_forward: parameter count mismatch");
    if (x.size() != static_cast<std::size_t>(spec.input_width()))
        throw UsageError("mlp_forward: input width mismatch");

    std::vector<ad::Var> act(x.begin(), x.end());
    std::vector<ad::Var> next;
    std::size_t k = 0;
    const std::size_t n_layers = spec.layer_widths.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int in = spec.layer_widths[l];
        const int out = spec.layer_widths[l + 1];
        const std::size_t w0 = k;
        const std::size_t b0 = k + static_cast<std::size_t>(in) * out;
        next.clear();
        next.reserve(out);
        for (int j = 0; j < out; ++j) {
            ad::Var z = params[b0 + j];
            for (int i = 0; i < in; ++i)
                z = tape.mul_add(params[w0 + static_cast<std::size_t>(j) * in + i], act[i], z);
            if (l + 1 < n_layers) {
                switch (spec.activation) {
                case Activation::Tanh: z = tape.tanh(z); break;
                case Activation::Sin: z = tape.sin(z); break;
                case Activation::Relu: z = tape.relu(z); break;
                }
            }
            next.push_back(z);
        }
        act.swap(next);
        k = b0 + out;
    }
    return act;
}

std::vector<double> mlp_forward_values(const MlpParams& params, std::span<const double> x) {
    if (params.layers.empty() || x.size() != static_cast<std::size_t>(params.layers.front().in))
        throw UsageError("mlp_forward_values: input width mismatch");
    std::vector<double> act(x.begin(), x.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        next.assign(layer.out, 0.0);
        for (int j = 0; j < layer.out; ++j) {
            double z = layer.b[j];
            const double* wrow = layer.w.data() + static_cast<std::size_t>(j) * layer.in;
            for (int i = 0; i < layer.in; ++i)
                z = wrow[i] * act[i] + z;
            if (l + 1 < params.layers.size()) {
                switch (params.activation) {
                case Activation::Tanh: z = std::tanh(z); break;
                case Activation::Sin: z = std::sin(z); break;
                case Activation::Relu: z = z > 0.0 ? z : 0.0; break;
                }
            }
            next[j] = z;
        }
        act.swap(next);
    }
    return act;
}

ad::Var mse_loss(ad::Tape& tape, std::span<const ad::Var> preds,
                 std::span<const double> targets) {
    if (preds.empty())
        throw UsageError("mse_loss: empty prediction set");
    if (preds.size() != targets.size())
        throw UsageError("mse_loss: size mismatch");
    ad::Var acc = tape.constant(0.0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        ad::Var d = preds[i] - targets[i];
        acc = tape.mul_add(d, d, acc);
    }
    return acc / static_cast<double>(preds.size());
}

namespace {
constexpr std::uint32_t kMagic = 0x464d534cu; // "LSMF" little-endian = "FSML" bytes
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw NumericError("checkpoint: truncated stream");
    return v;
}
} // namespace

void save_params(std::ostream& os, const MlpParams& params) {
    write_le(os, kMagic);
    write_le(os, kVersion);
    write_le(os, static_cast<std::uint32_t>(params.activation));
    const MlpSpec spec = params.spec();
    write_le(os, static_cast<std::uint32_t>(spec.layer_widths.size()));
    for (int w : spec.layer_widths)
        write_le(os, static_cast<std::uint32_t>(w));
    const std::vector<double> flat = params.flatten();
    os.write(reinterpret_cast<const char*>(flat.data()),
             static_cast<std::streamsize>(flat.size() * sizeof(double)));
}

MlpParams load_params(std::istream& is) {
    if (read_le<std::uint32_t>(is) != kMagic)
        throw NumericError("checkpoint: bad magic");
    if (read_le<std::uint32_t>(is) != kVersion)
        throw NumericError("checkpoint: unsupported version");
    MlpSpec spec;
    spec.activation = static_cast<Activation>(read_le<std::uint32_t>(is));
    const std::uint32_t n = read_le<std::uint32_t>(is);
    spec.layer_widths.resize(n);
    for (std::uint32_t i = 0; i < n; ++i)
        spec.layer_widths[i] = static_cast<int>(read_le<std::uint32_t>(is));
    spec.validate();
    std::vector<double> flat(spec.param_count());
    is.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!is)
        throw NumericError("checkpoint: truncated parameter block");
    return MlpParams::from_flat(spec, flat);
}

void save_params_file(const std::string& path, const MlpParams& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw UsageError("cannot open '" + path + "' for writing");
    save_params(os, params);
}

MlpParams load_params_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw UsageError("cannot open '" + path + "'");
    return load_params(is);
}

} // namespace fedsciml::nn
