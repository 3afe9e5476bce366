#pragma once

#include <memory>

#include "fedsciml/federation.hpp"
#include "fedsciml/mlp.hpp"
#include "fedsciml/solvers.hpp"

namespace fedsciml::pde {

/// Scalar field built on a tape from coordinate Vars; either a hard-BC
/// network output or an exact-solution expression (so residual assembly can
/// be checked against analytic solutions directly).
using Field = ad::ScalarFn;

// --- PDE residuals -----------------------------------------------------------
// Pointwise residuals with boundary/initial conditions enforced by the output
// transforms below, never by penalty terms.

/// -u_xx - f(x), f = sum_{i=1..4} i sin(ix) + 8 sin(8x), x in [0, pi].
ad::Var residual_poisson_1d(ad::Tape& tape, const Field& u, ad::Var x);

/// -u_xx - u_yy - k0^2 u - f, f = k0^2 sin(k0 x) sin(k0 y), k0 = 4 pi.
ad::Var residual_helmholtz_2d(ad::Tape& tape, const Field& u, ad::Var x, ad::Var y);

/// u_t - d u_xx - 5 (u - u^3), d = 1e-3, (x,t) in [-1,1] x [0,1].
ad::Var residual_allen_cahn(ad::Tape& tape, const Field& u, ad::Var x, ad::Var t);

/// lambda u_xx - k(x) u - f, lambda = 0.01, f = sin(2 pi x), x in [0,1].
ad::Var residual_inverse_dr(ad::Tape& tape, const Field& u, const Field& k_hat, ad::Var x);

// --- Hard-constraint output transforms (value space) -------------------------
// n is the raw network output at the same point.

double hard_bc_poisson(double x, double n);                  // u(0)=0, u(pi)=pi
double hard_bc_helmholtz(double x, double y, double n);      // u = 0 on the square edge
double hard_bc_allen_cahn(double x, double t, double n);     // u(x,0)=x^2 cos(pi x), u(+-1,t)=-1
double hard_bc_inverse_dr_u(double x, double n);             // u(0)=u(1)=0
double softplus_value(double n);                             // k-positivity map

/// ||approx - reference||_2 / ||reference||_2 over the grid.
double l2_relative_error(const std::function<double(std::span<const double>)>& approx,
                         const std::function<double(std::span<const double>)>& reference,
                         const data::PointSet& grid);

// --- Problem construction ------------------------------------------------------

struct ProblemOptions {
    int points = 0;            // dataset size override (regression problems)
    int interior_points = 0;   // collocation override (PINN problems)
    int test_grid = 0;         // per-axis test grid override
    std::vector<int> hidden;   // hidden-layer widths override
    std::size_t max_chunk = 0; // loss-graph chunk override
};

/// Known names: gramacy, schaffer, poisson1d, helmholtz2d, allen-cahn,
/// inverse-dr.
std::unique_ptr<fed::FederatedProblem> make_problem(const std::string& name,
                                                    const ProblemOptions& opts = {});

std::vector<std::string> problem_names();

} // namespace fedsciml::pde
