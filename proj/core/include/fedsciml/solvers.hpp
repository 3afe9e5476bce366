#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedsciml/errors.hpp"

namespace fedsciml::solvers {

struct Grid1D {
    double lo = 0.0, hi = 1.0;
    int nodes = 3;

    void validate() const;
    double h() const { return (hi - lo) / (nodes - 1); }
    double x(int i) const { return lo + i * h(); }
    std::vector<double> coords() const;
};

struct Grid2D {
    Grid1D x, y; // y doubles as the time axis for space-time grids

    std::size_t count() const {
        return static_cast<std::size_t>(x.nodes) * y.nodes;
    }
};

/// Solver output plus enough diagnostics that a flagged run is never
/// mistaken for success.
struct SolverReport {
    std::vector<double> values;  // grid values, row-major (x fastest)
    int iterations = 0;
    double residual_norm = 0.0;
    bool stable = true;
};

// --- ODE: adaptive Dormand-Prince 5(4) --------------------------------------

struct Rk45Options {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double initial_step = 1e-4;
    std::size_t max_steps = 1000000;
};

/// Integrates u' = f(x, u) from x0 with u(x0) = u0 and returns u at the
/// (ascending) query points via the 5th-order dense interpolant.
std::vector<double> rk45(const std::function<double(double, double)>& f,
                         double x0, double u0, std::span<const double> queries,
                         const Rk45Options& opts = {});

/// Antiderivative helper: u(x) = integral of v from 0 to x at the queries.
std::vector<double> integrate_antiderivative(const std::function<double(double)>& v,
                                             std::span<const double> queries,
                                             const Rk45Options& opts = {});

// --- Time-dependent diffusion-reaction: u_t = D u_xx + k u^2 + v(x) --------

struct DrTimeOptions {
    double diffusion = 0.01;  // D
    double reaction = 0.01;   // k
    int nx = 101;
    int nt = 101;
    double t_end = 1.0;
    double fixed_point_tol = 1e-10;
    int max_fixed_point_iters = 100;
};

/// Crank-Nicolson diffusion with the quadratic reaction and source treated at
/// the midpoint through an inner fixed-point iteration. Zero initial and
/// boundary conditions on [0,1]. Output: nt x nx, row-major in time.
SolverReport solve_dr_time(const std::function<double(double)>& source,
                           const DrTimeOptions& opts = {});

// --- Burgers: u_t + u u_x = nu u_xx, periodic on [0,1] ----------------------

struct BurgersOptions {
    double viscosity = 0.1;
    int nx = 128;          // periodic nodes (x = i/nx)
    int nt_out = 101;      // stored time levels including t=0
    double t_end = 1.0;
    double safety = 0.5;   // fraction of the diffusive/advective stability limit
};

/// Conservative-form convection (central), central diffusion, RK4 in time
/// with dt from the stability limits scaled by `safety`. Output: nt_out x nx.
SolverReport solve_burgers(std::span<const double> initial, const BurgersOptions& opts = {});

// --- Allen-Cahn reference: u_t = d u_xx + 5(u - u^3) ------------------------

struct AllenCahnOptions {
    double d = 0.001;
    int nx = 512;          // nodes on [-1,1]
    double dt = 1e-4;
    int nt_out = 101;      // stored levels on [0,1]
    double t_end = 1.0;
};

/// Implicit diffusion / explicit reaction stepping from u(x,0) = x^2 cos(pi x)
/// with u(+-1, t) = -1. Output: nt_out x nx.
SolverReport solve_allen_cahn(const AllenCahnOptions& opts = {});

// --- Two-point BVP: lambda u'' - k(x) u = f(x), u(0) = u(1) = 0 -------------

struct DrBvpOptions {
    double lambda = 0.01;
    int nodes = 1001;
};

SolverReport solve_dr_bvp(const std::function<double(double)>& k,
                          const std::function<double(double)>& f,
                          const DrBvpOptions& opts = {});

// --- Closed-form references --------------------------------------------------

/// Known names: poisson1d_u, helmholtz2d_u (2 args), inverse_dr_k, gramacy,
/// schaffer (2 args).
std::function<double(std::span<const double>)> analytic_solution(const std::string& name);

double poisson1d_exact(double x);
double poisson1d_source(double x); // f with -u'' = f
double helmholtz2d_exact(double x, double y);
double inverse_dr_exact_k(double x);
double gramacy_lee(double x);  // normalized to [-1,1]
double schaffer2d(double x, double y);

} // namespace fedsciml::solvers
