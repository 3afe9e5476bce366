#include "fedsciml/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace fedsciml::ad {

const char* op_name(Op op) {
    switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Const: return "const";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::MulAdd: return "mul_add";
    case Op::Tanh: return "tanh";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Relu: return "relu";
    case Op::ReluGate: return "relu_gate";
    case Op::Softplus: return "softplus";
    case Op::PowConst: return "pow";
    }
    return "?";
}

double Var::value() const { return tape_->value_at(id_); }

std::uint32_t Tape::check(Var v) const {
    if (v.tape() != this)
        throw UsageError("ad: variable belongs to a different tape");
    return v.id();
}

void Tape::check_finite(Op op, double value, std::uint32_t a, std::uint32_t b) const {
    if (std::isfinite(value))
        return;
    std::ostringstream msg;
    msg << "ad: non-finite value from op '" << op_name(op) << "'";
    if (!nodes_.empty()) {
        msg << " with inputs (";
        msg << values_[a];
        if (op != Op::Neg && op != Op::Tanh && op != Op::Sin && op != Op::Cos &&
            op != Op::Exp && op != Op::Log && op != Op::Relu && op != Op::Softplus)
            msg << ", " << values_[b];
        msg << ")";
    }
    throw NumericError(msg.str());
}

Var Tape::push(Op op, double value, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    if (op != Op::Leaf && op != Op::Const)
        check_finite(op, value, a, b);
    nodes_.push_back(Node{op, a, b, c});
    values_.push_back(value);
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::leaf(double v) { return push(Op::Leaf, v); }
Var Tape::constant(double v) { return push(Op::Const, v); }

Var Tape::add(Var a, Var b) {
    std::uint32_t i = check(a), j = check(b);
    return push(Op::Add, values_[i] + values_[j], i, j);
}

Var Tape::sub(Var a, Var b) {
    std::uint32_t i = check(a), j = check(b);
    return push(Op::Sub, values_[i] - values_[j], i, j);
}

Var Tape::mul(Var a, Var b) {
    std::uint32_t i = check(a), j = check(b);
    return push(Op::Mul, values_[i] * values_[j], i, j);
}

Var Tape::div(Var a, Var b) {
    std::uint32_t i = check(a), j = check(b);
    return push(Op::Div, values_[i] / values_[j], i, j);
}

Var Tape::neg(Var a) {
    std::uint32_t i = check(a);
    return push(Op::Neg, -values_[i], i);
}

Var Tape::mul_add(Var a, Var b, Var c) {
    std::uint32_t i = check(a), j = check(b), k = check(c);
    return push(Op::MulAdd, values_[i] * values_[j] + values_[k], i, j, k);
}

Var Tape::tanh(Var a) {
    std::uint32_t i = check(a);
    return push(Op::Tanh, std::tanh(values_[i]), i);
}

Var Tape::sin(Var a) {
    std::uint32_t i = check(a);
    return push(Op::Sin, std::sin(values_[i]), i);
}

Var Tape::cos(Var a) {
    std::uint32_t i = check(a);
    return push(Op::Cos, std::cos(values_[i]), i);
}

Var Tape::exp(Var a) {
    std::uint32_t i = check(a);
    return push(Op::Exp, std::exp(values_[i]), i);
}

Var Tape::log(Var a) {
    std::uint32_t i = check(a);
    return push(Op::Log, std::log(values_[i]), i);
}

Var Tape::relu(Var a) {
    std::uint32_t i = check(a);
    double x = values_[i];
    return push(Op::Relu, x > 0.0 ? x : 0.0, i);
}

namespace {
inline double softplus_value(double x) {
    // Stable on both tails: softplus(x) = max(x,0) + log1p(exp(-|x|))
    return (x > 0.0 ? x : 0.0) + std::log1p(std::exp(-std::fabs(x)));
}
inline double relu_gate_value(double x) { return x > 0.0 ? 1.0 : 0.0; }
} // namespace

Var Tape::softplus(Var a) {
    std::uint32_t i = check(a);
    return push(Op::Softplus, softplus_value(values_[i]), i);
}

Var Tape::pow_const(Var a, double exponent) {
    std::uint32_t i = check(a);
    pow_exponents_.push_back(exponent);
    return push(Op::PowConst, std::pow(values_[i], exponent), i, 0,
                static_cast<std::uint32_t>(pow_exponents_.size() - 1));
}

void Tape::set_leaf(Var v, double x) {
    std::uint32_t i = check(v);
    if (nodes_[i].op != Op::Leaf)
        throw UsageError("ad: set_leaf on a non-leaf node");
    values_[i] = x;
}

void Tape::reserve(std::size_t n) {
    nodes_.reserve(n);
    values_.reserve(n);
}

void Tape::replay() {
    const std::size_t n = nodes_.size();
    double* v = values_.data();
    for (std::size_t i = 0; i < n; ++i) {
        const Node& nd = nodes_[i];
        switch (nd.op) {
        case Op::Leaf:
        case Op::Const: break;
        case Op::Add: v[i] = v[nd.a] + v[nd.b]; break;
        case Op::Sub: v[i] = v[nd.a] - v[nd.b]; break;
        case Op::Mul: v[i] = v[nd.a] * v[nd.b]; break;
        case Op::Div: v[i] = v[nd.a] / v[nd.b]; break;
        case Op::Neg: v[i] = -v[nd.a]; break;
        case Op::MulAdd: v[i] = v[nd.a] * v[nd.b] + v[nd.c]; break;
        case Op::Tanh: v[i] = std::tanh(v[nd.a]); break;
        case Op::Sin: v[i] = std::sin(v[nd.a]); break;
        case Op::Cos: v[i] = std::cos(v[nd.a]); break;
        case Op::Exp: v[i] = std::exp(v[nd.a]); break;
        case Op::Log: v[i] = std::log(v[nd.a]); break;
        case Op::Relu: v[i] = v[nd.a] > 0.0 ? v[nd.a] : 0.0; break;
        case Op::ReluGate: v[i] = relu_gate_value(v[nd.a]); break;
        case Op::Softplus: v[i] = softplus_value(v[nd.a]); break;
        case Op::PowConst: v[i] = std::pow(v[nd.a], pow_exponents_[nd.c]); break;
        }
    }
}

void Tape::seed_and_sweep(std::span<const Var> leaves, std::vector<double>& out) {
    // adjoint_ must already hold the seeds; sweeps high id -> low id.
    const double* v = values_.data();
    double* adj = adjoint_.data();
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        const double a = adj[i];
        if (a == 0.0)
            continue;
        const Node& nd = nodes_[i];
        switch (nd.op) {
        case Op::Leaf:
        case Op::Const:
        case Op::ReluGate: break;
        case Op::Add:
            adj[nd.a] += a;
            adj[nd.b] += a;
            break;
        case Op::Sub:
            adj[nd.a] += a;
            adj[nd.b] -= a;
            break;
        case Op::Mul:
            adj[nd.a] += a * v[nd.b];
            adj[nd.b] += a * v[nd.a];
            break;
        case Op::Div:
            adj[nd.a] += a / v[nd.b];
            adj[nd.b] -= a * v[i] / v[nd.b];
            break;
        case Op::Neg: adj[nd.a] -= a; break;
        case Op::MulAdd:
            adj[nd.a] += a * v[nd.b];
            adj[nd.b] += a * v[nd.a];
            adj[nd.c] += a;
            break;
        case Op::Tanh: adj[nd.a] += a * (1.0 - v[i] * v[i]); break;
        case Op::Sin: adj[nd.a] += a * std::cos(v[nd.a]); break;
        case Op::Cos: adj[nd.a] -= a * std::sin(v[nd.a]); break;
        case Op::Exp: adj[nd.a] += a * v[i]; break;
        case Op::Log: adj[nd.a] += a / v[nd.a]; break;
        case Op::Relu:
            if (v[nd.a] > 0.0)
                adj[nd.a] += a;
            break;
        case Op::Softplus:
            adj[nd.a] += a / (1.0 + std::exp(-v[nd.a]));
            break;
        case Op::PowConst: {
            const double k = pow_exponents_[nd.c];
            adj[nd.a] += a * k * std::pow(v[nd.a], k - 1.0);
            break;
        }
        }
    }
    out.resize(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i)
        out[i] = adj[check(leaves[i])];
}

std::vector<double> Tape::gradient(Var output, std::span<const Var> leaves) {
    std::pair<Var, double> seed{output, 1.0};
    return gradient_multi({&seed, 1}, leaves);
}

std::vector<double> Tape::gradient_multi(std::span<const std::pair<Var, double>> seeds,
                                         std::span<const Var> leaves) {
    adjoint_.assign(nodes_.size(), 0.0);
    for (const auto& [var, w] : seeds)
        adjoint_[check(var)] += w;
    std::vector<double> out;
    seed_and_sweep(leaves, out);
    return out;
}

std::vector<Var> Tape::gradient_vars(Var output, std::span<const Var> wrt) {
    const std::uint32_t out_id = check(output);

    // Adjoint expressions are materialized only for nodes on a path from a
    // `wrt` leaf to `output`: ancestors of the output intersected with
    // descendants of `wrt`. Everything else (notably parameter leaves when
    // differentiating w.r.t. coordinates) is skipped, which keeps the
    // recorded backward pass small.
    std::vector<std::uint8_t> reaches_out(out_id + 1, 0);
    reaches_out[out_id] = 1;
    for (std::uint32_t i = out_id + 1; i-- > 0;) {
        if (!reaches_out[i])
            continue;
        const Node& nd = nodes_[i];
        switch (nd.op) {
        case Op::Leaf:
        case Op::Const:
        case Op::ReluGate: break;
        case Op::MulAdd:
            reaches_out[nd.a] = reaches_out[nd.b] = reaches_out[nd.c] = 1;
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
            reaches_out[nd.a] = reaches_out[nd.b] = 1;
            break;
        default:
            reaches_out[nd.a] = 1;
            break;
        }
    }

    std::vector<std::uint8_t> need(out_id + 1, 0);
    for (Var w : wrt) {
        std::uint32_t id = check(w);
        if (id <= out_id)
            need[id] = 1;
    }
    for (std::uint32_t i = 0; i <= out_id; ++i) {
        if (need[i])
            continue;
        const Node& nd = nodes_[i];
        switch (nd.op) {
        case Op::Leaf:
        case Op::Const:
        case Op::ReluGate: break;
        case Op::MulAdd:
            need[i] = need[nd.a] | need[nd.b] | need[nd.c];
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
            need[i] = need[nd.a] | need[nd.b];
            break;
        default:
            need[i] = need[nd.a];
            break;
        }
    }
    for (std::uint32_t i = 0; i <= out_id; ++i)
        need[i] &= reaches_out[i];

    Var zero = constant(0.0);
    if (!need[out_id]) {
        // Output does not depend on any requested leaf.
        return std::vector<Var>(wrt.size(), zero);
    }

    constexpr std::uint32_t kNone = 0xffffffffu;
    std::vector<std::uint32_t> adj(out_id + 1, kNone);
    Var one = constant(1.0);
    adj[out_id] = one.id();

    auto acc = [&](std::uint32_t parent, Var contrib) {
        if (adj[parent] == kNone)
            adj[parent] = contrib.id();
        else
            adj[parent] = add(Var(this, adj[parent]), contrib).id();
    };
    auto node_var = [&](std::uint32_t id) { return Var(this, id); };

    for (std::uint32_t i = out_id + 1; i-- > 0;) {
        if (adj[i] == kNone || !need[i])
            continue;
        const Node nd = nodes_[i]; // copy: push() may reallocate nodes_
        const Var a_var = node_var(adj[i]);
        switch (nd.op) {
        case Op::Leaf:
        case Op::Const:
        case Op::ReluGate: break;
        case Op::Add:
            if (need[nd.a]) acc(nd.a, a_var);
            if (need[nd.b]) acc(nd.b, a_var);
            break;
        case Op::Sub:
            if (need[nd.a]) acc(nd.a, a_var);
            if (need[nd.b]) acc(nd.b, neg(a_var));
            break;
        case Op::Mul:
            if (need[nd.a]) acc(nd.a, mul(a_var, node_var(nd.b)));
            if (need[nd.b]) acc(nd.b, mul(a_var, node_var(nd.a)));
            break;
        case Op::Div:
            if (need[nd.a]) acc(nd.a, div(a_var, node_var(nd.b)));
            // d(a/b)/db = -(a/b)/b
            if (need[nd.b]) acc(nd.b, neg(div(mul(a_var, node_var(i)), node_var(nd.b))));
            break;
        case Op::Neg:
            if (need[nd.a]) acc(nd.a, neg(a_var));
            break;
        case Op::MulAdd:
            if (need[nd.a]) acc(nd.a, mul(a_var, node_var(nd.b)));
            if (need[nd.b]) acc(nd.b, mul(a_var, node_var(nd.a)));
            if (need[nd.c]) acc(nd.c, a_var);
            break;
        case Op::Tanh: {
            if (!need[nd.a]) break;
            Var y = node_var(i);
            acc(nd.a, mul(a_var, sub(one, mul(y, y))));
            break;
        }
        case Op::Sin:
            if (need[nd.a]) acc(nd.a, mul(a_var, cos(node_var(nd.a))));
            break;
        case Op::Cos:
            if (need[nd.a]) acc(nd.a, neg(mul(a_var, sin(node_var(nd.a)))));
            break;
        case Op::Exp:
            if (need[nd.a]) acc(nd.a, mul(a_var, node_var(i)));
            break;
        case Op::Log:
            if (need[nd.a]) acc(nd.a, div(a_var, node_var(nd.a)));
            break;
        case Op::Relu:
            if (need[nd.a])
                acc(nd.a, mul(a_var, push(Op::ReluGate, relu_gate_value(values_[nd.a]), nd.a)));
            break;
        case Op::Softplus: {
            if (!need[nd.a]) break;
            // d softplus / dx = sigmoid(x) = 1 / (1 + exp(-x))
            Var x = node_var(nd.a);
            Var sig = div(one, add(one, exp(neg(x))));
            acc(nd.a, mul(a_var, sig));
            break;
        }
        case Op::PowConst: {
            if (!need[nd.a]) break;
            const double k = pow_exponents_[nd.c];
            Var dk = mul(constant(k), pow_const(node_var(nd.a), k - 1.0));
            acc(nd.a, mul(a_var, dk));
            break;
        }
        }
    }

    std::vector<Var> out;
    out.reserve(wrt.size());
    for (Var w : wrt) {
        std::uint32_t id = check(w);
        if (id <= out_id && adj[id] != kNone)
            out.push_back(node_var(adj[id]));
        else
            out.push_back(zero);
    }
    return out;
}

double second_derivative(const ScalarFn& f, std::span<const double> x,
                         std::size_t i, std::size_t j) {
    if (i >= x.size() || j >= x.size())
        throw UsageError("second_derivative: component index out of range");
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(x.size());
    for (double xi : x)
        leaves.push_back(tape.leaf(xi));
    Var y = f(tape, leaves);
    std::vector<Var> g = tape.gradient_vars(y, leaves);
    return tape.gradient(g[i], leaves)[j];
}

Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
Var operator/(Var a, Var b) { return a.tape()->div(a, b); }
Var operator-(Var a) { return a.tape()->neg(a); }
Var operator+(Var a, double b) { return a.tape()->add(a, a.tape()->constant(b)); }
Var operator+(double a, Var b) { return b.tape()->add(b.tape()->constant(a), b); }
Var operator-(Var a, double b) { return a.tape()->sub(a, a.tape()->constant(b)); }
Var operator-(double a, Var b) { return b.tape()->sub(b.tape()->constant(a), b); }
Var operator*(Var a, double b) { return a.tape()->mul(a, a.tape()->constant(b)); }
Var operator*(double a, Var b) { return b.tape()->mul(b.tape()->constant(a), b); }
Var operator/(Var a, double b) { return a.tape()->div(a, a.tape()->constant(b)); }
Var operator/(double a, Var b) { return b.tape()->div(b.tape()->constant(a), b); }

} // namespace fedsciml::ad
