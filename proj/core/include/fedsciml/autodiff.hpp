#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedsciml/errors.hpp"

namespace fedsciml::ad {

enum class Op : std::uint8_t {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    MulAdd,   // a*b + c
    Tanh,
    Sin,
    Cos,
    Exp,
    Log,
    Relu,
    ReluGate, // value = (a > 0) ? 1 : 0, all partials zero
    Softplus,
    PowConst, // a^k with constant exponent k
};

const char* op_name(Op op);

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Var {
public:
    Var() = default;
    double value() const;
    std::uint32_t id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

/// Append-only record of a scalar computation. Nodes are stored in
/// topological order (parents precede children), so the whole graph can be
/// re-evaluated in place with replay() after leaf values change, reproducing
/// identical values bit-for-bit for identical leaves.
///
/// gradient() runs a plain reverse sweep and returns derivative values.
/// gradient_vars() records the reverse sweep itself as tape operations, so a
/// second sweep can differentiate it (derivatives of derivatives, as needed
/// for PDE residuals).
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    Var leaf(double v);
    Var constant(double v);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var neg(Var a);
    Var mul_add(Var a, Var b, Var c); // a*b + c
    Var tanh(Var a);
    Var sin(Var a);
    Var cos(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var relu(Var a);
    Var softplus(Var a);
    Var pow_const(Var a, double exponent);

    std::size_t size() const { return nodes_.size(); }
    double value(Var v) const { return values_[check(v)]; }
    double value_at(std::uint32_t id) const { return values_[id]; }

    /// Overwrites a leaf's value. The change takes effect on the next replay.
    void set_leaf(Var v, double x);

    /// Recomputes every non-leaf node value in recording order.
    void replay();

    /// d(output)/d(leaf) for each leaf, by one reverse value sweep.
    /// Leaves not on any path to output get 0. O(tape size).
    std::vector<double> gradient(Var output, std::span<const Var> leaves);

    /// Reverse sweep with several seeded outputs: sum_i seed_i * d(output_i)/d(leaf).
    std::vector<double> gradient_multi(std::span<const std::pair<Var, double>> seeds,
                                       std::span<const Var> leaves);

    /// Records the reverse sweep as tape nodes and returns the adjoints of
    /// `wrt` as differentiable Vars. Adjoints are materialized only for nodes
    /// on paths from `wrt` to `output`; other leaves act as stops.
    std::vector<Var> gradient_vars(Var output, std::span<const Var> wrt);

    /// Reserve node storage up front (training graphs are large).
    void reserve(std::size_t n);

private:
    struct Node {
        Op op;
        std::uint32_t a = 0;
        std::uint32_t b = 0;
        std::uint32_t c = 0; // third parent (MulAdd) or pow-exponent index
    };

    Var push(Op op, double value, std::uint32_t a = 0, std::uint32_t b = 0,
             std::uint32_t c = 0);
    std::uint32_t check(Var v) const;
    void check_finite(Op op, double value, std::uint32_t a, std::uint32_t b) const;
    void seed_and_sweep(std::span<const Var> leaves, std::vector<double>& out);

    std::vector<Node> nodes_;
    std::vector<double> values_;
    std::vector<double> pow_exponents_;
    std::vector<double> adjoint_; // scratch for value sweeps
};

// Expression-style helpers so problem code reads like math.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

inline Var tanh(Var a) { return a.tape()->tanh(a); }
inline Var sin(Var a) { return a.tape()->sin(a); }
inline Var cos(Var a) { return a.tape()->cos(a); }
inline Var exp(Var a) { return a.tape()->exp(a); }
inline Var log(Var a) { return a.tape()->log(a); }
inline Var relu(Var a) { return a.tape()->relu(a); }
inline Var softplus(Var a) { return a.tape()->softplus(a); }
inline Var pow(Var a, double k) { return a.tape()->pow_const(a, k); }
inline Var square(Var a) { return a.tape()->mul(a, a); }

/// Builds a scalar expression from leaf Vars; the common shape for fields,
/// losses, and test functions throughout the toolkit.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

/// d2f/dx_i dx_j at x. Implemented as a value sweep over the recorded
/// reverse sweep (reverse-over-reverse).
double second_derivative(const ScalarFn& f, std::span<const double> x,
                         std::size_t i, std::size_t j);

} // namespace fedsciml::ad
