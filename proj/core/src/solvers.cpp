#include "fedsciml/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fedsciml::solvers {

void Grid1D::validate() const {
    if (nodes < 3)
        throw UsageError("grid: need at least 3 nodes");
    if (hi <= lo)
        throw UsageError("grid: empty interval");
}

std::vector<double> Grid1D::coords() const {
    validate();
    std::vector<double> xs(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i)
        xs[static_cast<std::size_t>(i)] = x(i);
    return xs;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4), FSAL, with the standard dense-output interpolant.

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

} // namespace

std::vector<double> rk45(const std::function<double(double, double)>& f,
                         double x0, double u0, std::span<const double> queries,
                         const Rk45Options& opts) {
    for (std::size_t q = 0; q + 1 < queries.size(); ++q)
        if (queries[q + 1] < queries[q])
            throw UsageError("rk45: queries must be ascending");

    std::vector<double> out(queries.size());
    std::size_t q = 0;
    while (q < queries.size() && queries[q] <= x0) {
        out[q] = u0; // queries at or before the start evaluate to u0
        ++q;
    }
    if (q == queries.size())
        return out;
    const double x_end = queries.back();

    double x = x0, u = u0;
    double k1 = f(x, u);
    double h = std::min(opts.initial_step, x_end - x0);
    std::size_t steps = 0;

    while (x < x_end) {
        if (++steps > opts.max_steps)
            throw NumericError("rk45: exceeded max step count");
        if (h < 1e-14 * std::max(1.0, std::fabs(x)))
            throw NumericError("rk45: step size underflow");
        if (x + h > x_end)
            h = x_end - x;

        const double k2 = f(x + c2 * h, u + h * (a21 * k1));
        const double k3 = f(x + c3 * h, u + h * (a31 * k1 + a32 * k2));
        const double k4 = f(x + c4 * h, u + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = f(x + c5 * h, u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = f(x + h, u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double u1 = u + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double k7 = f(x + h, u1); // FSAL

        const double err_raw =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double tol = opts.abs_tol +
                           opts.rel_tol * std::max(std::fabs(u), std::fabs(u1));
        const double err = std::fabs(err_raw) / tol;

        if (err <= 1.0) {
            // Dense output for queries inside (x, x+h].
            const double ydiff = u1 - u;
            const double bspl = h * k1 - ydiff;
            const double r1 = u, r2 = ydiff, r3 = bspl;
            const double r4 = ydiff - h * k7 - bspl;
            const double r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            while (q < queries.size() && queries[q] <= x + h) {
                const double th = (queries[q] - x) / h;
                const double th1 = 1.0 - th;
                out[q] = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
                ++q;
            }
            x += h;
            u = u1;
            k1 = k7;
        }
        const double factor = err > 0.0
                                  ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0)
                                  : 5.0;
        h *= factor;
    }
    while (q < queries.size()) {
        out[q] = u;
        ++q;
    }
    return out;
}

std::vector<double> integrate_antiderivative(const std::function<double(double)>& v,
                                             std::span<const double> queries,
                                             const Rk45Options& opts) {
    return rk45([&](double x, double) { return v(x); }, 0.0, 0.0, queries, opts);
}

// ---------------------------------------------------------------------------
// Tridiagonal (Thomas) solve; coefficients are consumed.

namespace {

void thomas_solve(std::vector<double>& a, std::vector<double>& b,
                  std::vector<double>& c, std::vector<double>& d) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

} // namespace

SolverReport solve_dr_time(const std::function<double(double)>& source,
                           const DrTimeOptions& opts) {
    if (opts.nx < 3 || opts.nt < 2)
        throw UsageError("solve_dr_time: grid too small");
    const int nx = opts.nx, nt = opts.nt;
    const double h = 1.0 / (nx - 1);
    const double dt = opts.t_end / (nt - 1);
    const double D = opts.diffusion, k = opts.reaction;
    const double r = D * dt / (2.0 * h * h); // CN diffusion number

    std::vector<double> v(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i)
        v[static_cast<std::size_t>(i)] = source(i * h);

    SolverReport report;
    report.values.assign(static_cast<std::size_t>(nx) * nt, 0.0); // zero IC
    std::vector<double> u(static_cast<std::size_t>(nx), 0.0);
    std::vector<double> unew(u), uprev(u);
    std::vector<double> lo, diag, up, rhs;

    for (int step = 1; step < nt; ++step) {
        unew = u; // fixed-point start
        int it = 0;
        double delta = 0.0;
        for (; it < opts.max_fixed_point_iters; ++it) {
            uprev = unew;
            lo.assign(static_cast<std::size_t>(nx), -r);
            diag.assign(static_cast<std::size_t>(nx), 1.0 + 2.0 * r);
            up.assign(static_cast<std::size_t>(nx), -r);
            rhs.assign(static_cast<std::size_t>(nx), 0.0);
            for (int i = 1; i + 1 < nx; ++i) {
                const double umid = 0.5 * (u[i] + uprev[i]);
                rhs[i] = u[i] + r * (u[i + 1] - 2.0 * u[i] + u[i - 1]) +
                         dt * (k * umid * umid + v[i]);
            }
            // Dirichlet rows
            diag[0] = diag[static_cast<std::size_t>(nx - 1)] = 1.0;
            lo[0] = up[0] = 0.0;
            lo[static_cast<std::size_t>(nx - 1)] = up[static_cast<std::size_t>(nx - 1)] = 0.0;
            rhs[0] = rhs[static_cast<std::size_t>(nx - 1)] = 0.0;
            thomas_solve(lo, diag, up, rhs);
            unew = rhs;
            delta = 0.0;
            for (int i = 0; i < nx; ++i)
                delta = std::max(delta, std::fabs(unew[i] - uprev[i]));
            if (delta < opts.fixed_point_tol)
                break;
        }
        if (delta >= opts.fixed_point_tol)
            throw NumericError("solve_dr_time: inner fixed-point iteration did not converge");
        report.iterations += it + 1;
        u = unew;
        for (int i = 0; i < nx; ++i) {
            if (!std::isfinite(u[i]))
                throw NumericError("solve_dr_time: non-finite solution value");
            report.values[static_cast<std::size_t>(step) * nx + i] = u[i];
        }
    }
    return report;
}

SolverReport solve_burgers(std::span<const double> initial, const BurgersOptions& opts) {
    const int nx = opts.nx;
    if (nx < 8)
        throw UsageError("solve_burgers: need at least 8 nodes");
    if (initial.size() != static_cast<std::size_t>(nx))
        throw UsageError("solve_burgers: initial data size mismatch");
    if (opts.nt_out < 2)
        throw UsageError("solve_burgers: need at least 2 output levels");

    const double h = 1.0 / nx; // periodic: x_i = i h, node nx == node 0
    const double nu = opts.viscosity;
    double umax = 0.0;
    for (double ui : initial)
        umax = std::max(umax, std::fabs(ui));

    const double dt_diff = h * h / (2.0 * nu);
    const double dt_adv = umax > 0.0 ? h / umax : dt_diff;
    double dt = opts.safety * std::min(dt_diff, dt_adv);
    if (dt <= 0.0 || !std::isfinite(dt))
        throw NumericError("solve_burgers: stability limit gives no usable time step");
    const long n_steps = static_cast<long>(std::ceil(opts.t_end / dt));
    dt = opts.t_end / static_cast<double>(n_steps);

    auto rhs = [&](const std::vector<double>& u, std::vector<double>& du) {
        for (int i = 0; i < nx; ++i) {
            const int im = (i + nx - 1) % nx;
            const int ip = (i + 1) % nx;
            const double flux = (u[ip] * u[ip] - u[im] * u[im]) / (4.0 * h); // (u^2/2)_x central
            const double diff = nu * (u[ip] - 2.0 * u[i] + u[im]) / (h * h);
            du[static_cast<std::size_t>(i)] = -flux + diff;
        }
    };

    SolverReport report;
    report.values.assign(static_cast<std::size_t>(opts.nt_out) * nx, 0.0);
    std::vector<double> u(initial.begin(), initial.end());
    std::copy(u.begin(), u.end(), report.values.begin());

    std::vector<double> k1(u.size()), k2(u.size()), k3(u.size()), k4(u.size()), tmp(u.size());
    const double out_every = opts.t_end / (opts.nt_out - 1);
    int next_out = 1;

    for (long step = 1; step <= n_steps; ++step) {
        rhs(u, k1);
        for (std::size_t i = 0; i < u.size(); ++i)
            tmp[i] = u[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < u.size(); ++i)
            tmp[i] = u[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < u.size(); ++i)
            tmp[i] = u[i] + dt * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < u.size(); ++i)
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

        double unorm = 0.0;
        for (double ui : u)
            unorm = std::max(unorm, std::fabs(ui));
        if (!std::isfinite(unorm) || unorm > 50.0 * (umax + 1.0)) {
            report.stable = false;
            throw NumericError("solve_burgers: solution blew up (stability violation)");
        }

        const double t = dt * static_cast<double>(step);
        while (next_out < opts.nt_out && t + 1e-12 >= next_out * out_every) {
            std::copy(u.begin(), u.end(),
                      report.values.begin() + static_cast<std::size_t>(next_out) * nx);
            ++next_out;
        }
    }
    report.iterations = static_cast<int>(n_steps);
    return report;
}

SolverReport solve_allen_cahn(const AllenCahnOptions& opts) {
    const int nx = opts.nx;
    if (nx < 8)
        throw UsageError("solve_allen_cahn: grid too small");
    const double h = 2.0 / (nx - 1); // domain [-1, 1]
    const double dt = opts.dt;
    const long n_steps = static_cast<long>(std::llround(opts.t_end / dt));
    const double r = opts.d * dt / (h * h);

    std::vector<double> u(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) {
        const double x = -1.0 + i * h;
        u[static_cast<std::size_t>(i)] = x * x * std::cos(std::numbers::pi * x);
    }

    SolverReport report;
    report.values.assign(static_cast<std::size_t>(opts.nt_out) * nx, 0.0);
    std::copy(u.begin(), u.end(), report.values.begin());

    std::vector<double> lo, diag, up, rhs;
    const double out_every = opts.t_end / (opts.nt_out - 1);
    int next_out = 1;

    for (long step = 1; step <= n_steps; ++step) {
        lo.assign(static_cast<std::size_t>(nx), -r);
        diag.assign(static_cast<std::size_t>(nx), 1.0 + 2.0 * r);
        up.assign(static_cast<std::size_t>(nx), -r);
        rhs.resize(static_cast<std::size_t>(nx));
        for (int i = 1; i + 1 < nx; ++i)
            rhs[i] = u[i] + dt * 5.0 * (u[i] - u[i] * u[i] * u[i]);
        diag[0] = diag[static_cast<std::size_t>(nx - 1)] = 1.0;
        lo[0] = up[0] = 0.0;
        lo[static_cast<std::size_t>(nx - 1)] = up[static_cast<std::size_t>(nx - 1)] = 0.0;
        rhs[0] = rhs[static_cast<std::size_t>(nx - 1)] = -1.0; // u(+-1, t) = -1
        thomas_solve(lo, diag, up, rhs);
        u = rhs;

        const double t = dt * static_cast<double>(step);
        while (next_out < opts.nt_out && t + 1e-9 >= next_out * out_every) {
            std::copy(u.begin(), u.end(),
                      report.values.begin() + static_cast<std::size_t>(next_out) * nx);
            ++next_out;
        }
    }
    for (double ui : u)
        if (!std::isfinite(ui))
            throw NumericError("solve_allen_cahn: non-finite solution value");
    report.iterations = static_cast<int>(n_steps);
    return report;
}

SolverReport solve_dr_bvp(const std::function<double(double)>& k,
                          const std::function<double(double)>& f,
                          const DrBvpOptions& opts) {
    const int n = opts.nodes;
    if (n < 3)
        throw UsageError("solve_dr_bvp: grid too small");
    const double h = 1.0 / (n - 1);
    const double lam = opts.lambda;

    // lambda (u_{i-1} - 2 u_i + u_{i+1})/h^2 - k_i u_i = f_i
    std::vector<double> lo(static_cast<std::size_t>(n), lam / (h * h));
    std::vector<double> up(lo);
    std::vector<double> diag(static_cast<std::size_t>(n));
    std::vector<double> rhs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = i * h;
        diag[static_cast<std::size_t>(i)] = -2.0 * lam / (h * h) - k(x);
        rhs[static_cast<std::size_t>(i)] = f(x);
    }
    diag[0] = diag[static_cast<std::size_t>(n - 1)] = 1.0;
    lo[0] = up[0] = 0.0;
    lo[static_cast<std::size_t>(n - 1)] = up[static_cast<std::size_t>(n - 1)] = 0.0;
    rhs[0] = rhs[static_cast<std::size_t>(n - 1)] = 0.0;

    // Guard against a (theoretically impossible for k > 0) singular pivot.
    std::vector<double> lo2(lo), diag2(diag), up2(up), sol(rhs);
    thomas_solve(lo2, diag2, up2, sol);
    for (double s : sol)
        if (!std::isfinite(s))
            throw NumericError("solve_dr_bvp: singular system");

    SolverReport report;
    report.values = std::move(sol);
    // Residual of the discrete operator, interior rows.
    double rmax = 0.0;
    for (int i = 1; i + 1 < n; ++i) {
        const double x = i * h;
        const double res = lam *
                               (report.values[i - 1] - 2.0 * report.values[i] +
                                report.values[i + 1]) /
                               (h * h) -
                           k(x) * report.values[i] - f(x);
        rmax = std::max(rmax, std::fabs(res));
    }
    report.residual_norm = rmax;
    return report;
}

// ---------------------------------------------------------------------------

double poisson1d_exact(double x) {
    double u = x;
    for (int i = 1; i <= 4; ++i)
        u += std::sin(i * x) / i;
    return u + std::sin(8.0 * x) / 8.0;
}

double poisson1d_source(double x) {
    double f = 0.0;
    for (int i = 1; i <= 4; ++i)
        f += i * std::sin(i * x);
    return f + 8.0 * std::sin(8.0 * x);
}

double helmholtz2d_exact(double x, double y) {
    const double k0 = 4.0 * std::numbers::pi; // 2 pi n with n = 2
    return std::sin(k0 * x) * std::sin(k0 * y);
}

double inverse_dr_exact_k(double x) {
    const double z = (x - 0.5) / 0.15;
    return 0.1 + std::exp(-0.5 * z * z);
}

double gramacy_lee(double x) {
    const double pi = std::numbers::pi;
    const double q = x + 0.5;
    return q * q * q * q - std::sin(10.0 * pi * x) / (2.0 * x + 3.0);
}

double schaffer2d(double x, double y) {
    const double s = std::sin(x * x - y * y);
    const double denom = 1.0 + 0.001 * (x * x + y * y);
    return 0.5 + (s * s - 0.5) / (denom * denom);
}

std::function<double(std::span<const double>)> analytic_solution(const std::string& name) {
    if (name == "poisson1d_u")
        return [](std::span<const double> x) { return poisson1d_exact(x[0]); };
    if (name == "helmholtz2d_u")
        return [](std::span<const double> x) { return helmholtz2d_exact(x[0], x[1]); };
    if (name == "inverse_dr_k")
        return [](std::span<const double> x) { return inverse_dr_exact_k(x[0]); };
    if (name == "gramacy")
        return [](std::span<const double> x) { return gramacy_lee(x[0]); };
    if (name == "schaffer")
        return [](std::span<const double> x) { return schaffer2d(x[0], x[1]); };
    throw UsageError("analytic_solution: unknown name '" + name + "'");
}

} // namespace fedsciml::solvers
