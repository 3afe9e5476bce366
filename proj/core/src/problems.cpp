#include "fedsciml/problems.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace fedsciml::pde {

namespace {

constexpr double kPi = std::numbers::pi;

data::PointSet linspace_points(double lo, double hi, int n) {
    data::PointSet pts(1);
    for (int i = 0; i < n; ++i)
        pts.push_back(lo + (hi - lo) * i / (n - 1));
    return pts;
}

ad::Var first_derivative(ad::Tape& t, ad::Var value, ad::Var coord) {
    std::array<ad::Var, 1> wrt{coord};
    return t.gradient_vars(value, wrt)[0];
}

} // namespace

ad::Var residual_poisson_1d(ad::Tape& t, const Field& u, ad::Var x) {
    std::array<ad::Var, 1> coords{x};
    ad::Var u_val = u(t, coords);
    ad::Var u_x = first_derivative(t, u_val, x);
    ad::Var u_xx = first_derivative(t, u_x, x);
    ad::Var f = t.constant(0.0);
    for (int i = 1; i <= 4; ++i)
        f = f + static_cast<double>(i) * ad::sin(static_cast<double>(i) * x);
    f = f + 8.0 * ad::sin(8.0 * x);
    return -u_xx - f;
}

ad::Var residual_helmholtz_2d(ad::Tape& t, const Field& u, ad::Var x, ad::Var y) {
    const double k0 = 4.0 * kPi;
    std::array<ad::Var, 2> coords{x, y};
    ad::Var u_val = u(t, coords);
    auto g = t.gradient_vars(u_val, coords);
    ad::Var u_xx = first_derivative(t, g[0], x);
    ad::Var u_yy = first_derivative(t, g[1], y);
    ad::Var f = (k0 * k0) * ad::sin(k0 * x) * ad::sin(k0 * y);
    return -u_xx - u_yy - (k0 * k0) * u_val - f;
}

ad::Var residual_allen_cahn(ad::Tape& t, const Field& u, ad::Var x, ad::Var time) {
    const double d = 0.001;
    std::array<ad::Var, 2> coords{x, time};
    ad::Var u_val = u(t, coords);
    auto g = t.gradient_vars(u_val, coords);
    ad::Var u_xx = first_derivative(t, g[0], x);
    ad::Var cubic = u_val * u_val * u_val;
    return g[1] - d * u_xx - 5.0 * (u_val - cubic);
}

ad::Var residual_inverse_dr(ad::Tape& t, const Field& u, const Field& k_hat, ad::Var x) {
    const double lambda = 0.01;
    std::array<ad::Var, 1> coords{x};
    ad::Var u_val = u(t, coords);
    ad::Var u_x = first_derivative(t, u_val, x);
    ad::Var u_xx = first_derivative(t, u_x, x);
    ad::Var k_val = k_hat(t, coords);
    ad::Var f = ad::sin((2.0 * kPi) * x);
    return lambda * u_xx - k_val * u_val - f;
}

double hard_bc_poisson(double x, double n) { return x + x * (kPi - x) * n; }

double hard_bc_helmholtz(double x, double y, double n) {
    return x * (1.0 - x) * y * (1.0 - y) * n;
}

double hard_bc_allen_cahn(double x, double t, double n) {
    return x * x * std::cos(kPi * x) + t * (1.0 - x * x) * n;
}

double hard_bc_inverse_dr_u(double x, double n) { return x * (1.0 - x) * n; }

double softplus_value(double n) {
    return (n > 0.0 ? n : 0.0) + std::log1p(std::exp(-std::fabs(n)));
}

double l2_relative_error(const std::function<double(std::span<const double>)>& approx,
                         const std::function<double(std::span<const double>)>& reference,
                         const data::PointSet& grid) {
    if (grid.size() == 0)
        throw UsageError("l2_relative_error: empty grid");
    double diff_sq = 0.0, ref_sq = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto p = grid.point(i);
        const double r = reference(p);
        const double d = approx(p) - r;
        diff_sq += d * d;
        ref_sq += r * r;
    }
    if (ref_sq <= 0.0)
        throw UsageError("l2_relative_error: reference has zero norm on the grid");
    return std::sqrt(diff_sq / ref_sq);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<fed::ParamBlock> mlp_blocks(const nn::MlpSpec& spec, const std::string& prefix,
                                        std::size_t base_offset) {
    std::vector<fed::ParamBlock> blocks;
    std::size_t off = base_offset;
    for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
        const std::size_t n = static_cast<std::size_t>(spec.layer_widths[l]) *
                                  spec.layer_widths[l + 1] +
                              spec.layer_widths[l + 1];
        blocks.push_back({prefix + "L" + std::to_string(l), off, n});
        off += n;
    }
    return blocks;
}

nn::MlpSpec make_spec(int in, std::vector<int> hidden, int out, nn::Activation act) {
    nn::MlpSpec spec;
    spec.layer_widths.push_back(in);
    for (int w : hidden)
        spec.layer_widths.push_back(w);
    spec.layer_widths.push_back(out);
    spec.activation = act;
    return spec;
}

/// Shared plumbing for problems backed by one dense network.
class SingleNetProblem : public fed::FederatedProblem {
public:
    SingleNetProblem(std::string name, nn::MlpSpec spec)
        : name_(std::move(name)), spec_(std::move(spec)) {}

    const std::string& name() const override { return name_; }
    std::size_t param_count() const override { return spec_.param_count(); }
    std::vector<fed::ParamBlock> param_blocks() const override {
        return mlp_blocks(spec_, "", 0);
    }
    std::vector<double> initial_params(std::uint64_t seed) const override {
        nn::MlpSpec seeded = spec_;
        seeded.seed = substream("init", seed);
        return nn::init_glorot(seeded).flatten();
    }

protected:
    nn::MlpParams unflatten(std::span<const double> flat) const {
        return nn::MlpParams::from_flat(spec_, flat);
    }

    std::string name_;
    nn::MlpSpec spec_;
};

// --- Function regression (Gramacy & Lee, Schaffer) ---------------------------

class RegressionProblem final : public SingleNetProblem {
public:
    RegressionProblem(std::string name, nn::MlpSpec spec, data::PointSet points,
                      std::vector<double> labels, data::PartitionKind partition,
                      std::function<double(std::span<const double>)> reference,
                      data::PointSet test_grid, std::size_t max_chunk)
        : SingleNetProblem(std::move(name), std::move(spec)), points_(std::move(points)),
          labels_(std::move(labels)), partition_(partition),
          reference_(std::move(reference)), test_grid_(std::move(test_grid)),
          max_chunk_(max_chunk) {}

    std::vector<data::Shard> make_shards(int n, int clients) const override {
        switch (partition_) {
        case data::PartitionKind::OneD:
            return data::partition_1d(points_, labels_, n, clients);
        case data::PartitionKind::TwoDX:
            return data::partition_2d_x(points_, labels_, n, clients);
        case data::PartitionKind::TwoDXY:
            return data::partition_2d_xy(points_, labels_, n, clients);
        }
        throw UsageError("regression: bad partition kind");
    }

    std::unique_ptr<fed::ClientLoss> make_loss(const data::Shard& shard) const override {
        if (!shard.labels)
            throw UsageError(name_ + ": shard carries no labels");
        const std::size_t dim = points_.dim;
        std::vector<double> rows;
        rows.reserve(shard.points.size() * (dim + 1));
        for (std::size_t i = 0; i < shard.points.size(); ++i) {
            auto p = shard.points.point(i);
            rows.insert(rows.end(), p.begin(), p.end());
            rows.push_back((*shard.labels)[i]);
        }
        const nn::MlpSpec spec = spec_;
        auto per_sample = [spec, dim](ad::Tape& t, std::span<const ad::Var> params,
                                      std::span<const ad::Var> sample) {
            auto pred = nn::mlp_forward(t, spec, params, sample.first(dim))[0];
            ad::Var diff = pred - sample[dim];
            return diff * diff;
        };
        return std::make_unique<fed::TapeLoss>(param_count(), std::move(rows), dim + 1,
                                               per_sample, nullptr, max_chunk_);
    }

    double test_error(std::span<const double> flat) const override {
        const nn::MlpParams params = unflatten(flat);
        auto approx = [&](std::span<const double> p) {
            return nn::mlp_forward_values(params, p)[0];
        };
        return l2_relative_error(approx, reference_, test_grid_);
    }

private:
    data::PointSet points_;
    std::vector<double> labels_;
    data::PartitionKind partition_;
    std::function<double(std::span<const double>)> reference_;
    data::PointSet test_grid_;
    std::size_t max_chunk_;
};

// --- Forward PINNs ------------------------------------------------------------

enum class Pde { Poisson1d, Helmholtz2d, AllenCahn };

class PinnProblem final : public SingleNetProblem {
public:
    PinnProblem(std::string name, nn::MlpSpec spec, Pde pde, data::PointSet collocation,
                data::PartitionKind partition, data::PointSet test_grid,
                std::vector<double> test_reference, std::size_t max_chunk)
        : SingleNetProblem(std::move(name), std::move(spec)), pde_(pde),
          collocation_(std::move(collocation)), partition_(partition),
          test_grid_(std::move(test_grid)), test_reference_(std::move(test_reference)),
          max_chunk_(max_chunk) {}

    std::vector<data::Shard> make_shards(int n, int clients) const override {
        switch (partition_) {
        case data::PartitionKind::OneD:
            return data::partition_1d(collocation_, {}, n, clients);
        case data::PartitionKind::TwoDX:
            return data::partition_2d_x(collocation_, {}, n, clients);
        case data::PartitionKind::TwoDXY:
            return data::partition_2d_xy(collocation_, {}, n, clients);
        }
        throw UsageError("pinn: bad partition kind");
    }

    std::unique_ptr<fed::ClientLoss> make_loss(const data::Shard& shard) const override {
        const nn::MlpSpec spec = spec_;
        const Pde pde = pde_;
        auto per_sample = [spec, pde](ad::Tape& t, std::span<const ad::Var> params,
                                      std::span<const ad::Var> sample) {
            auto net = [&](ad::Tape& tt, std::span<const ad::Var> coords) {
                return nn::mlp_forward(tt, spec, params, coords)[0];
            };
            ad::Var r = t.constant(0.0);
            switch (pde) {
            case Pde::Poisson1d: {
                auto field = [&](ad::Tape& tt, std::span<const ad::Var> c) {
                    ad::Var n = net(tt, c);
                    return c[0] + c[0] * (kPi - c[0]) * n;
                };
                r = residual_poisson_1d(t, field, sample[0]);
                break;
            }
            case Pde::Helmholtz2d: {
                auto field = [&](ad::Tape& tt, std::span<const ad::Var> c) {
                    ad::Var n = net(tt, c);
                    return c[0] * (1.0 - c[0]) * c[1] * (1.0 - c[1]) * n;
                };
                r = residual_helmholtz_2d(t, field, sample[0], sample[1]);
                break;
            }
            case Pde::AllenCahn: {
                auto field = [&](ad::Tape& tt, std::span<const ad::Var> c) {
                    ad::Var n = net(tt, c);
                    ad::Var x = c[0];
                    return x * x * ad::cos(kPi * x) + c[1] * (1.0 - x * x) * n;
                };
                r = residual_allen_cahn(t, field, sample[0], sample[1]);
                break;
            }
            }
            return r * r;
        };
        std::vector<double> rows(shard.points.values);
        return std::make_unique<fed::TapeLoss>(param_count(), std::move(rows),
                                               collocation_.dim, per_sample, nullptr,
                                               max_chunk_);
    }

    double test_error(std::span<const double> flat) const override {
        const nn::MlpParams params = unflatten(flat);
        double diff_sq = 0.0, ref_sq = 0.0;
        for (std::size_t i = 0; i < test_grid_.size(); ++i) {
            auto p = test_grid_.point(i);
            const double n = nn::mlp_forward_values(params, p)[0];
            double u = 0.0;
            switch (pde_) {
            case Pde::Poisson1d: u = hard_bc_poisson(p[0], n); break;
            case Pde::Helmholtz2d: u = hard_bc_helmholtz(p[0], p[1], n); break;
            case Pde::AllenCahn: u = hard_bc_allen_cahn(p[0], p[1], n); break;
            }
            const double r = test_reference_[i];
            diff_sq += (u - r) * (u - r);
            ref_sq += r * r;
        }
        return std::sqrt(diff_sq / ref_sq);
    }

private:
    Pde pde_;
    data::PointSet collocation_;
    data::PartitionKind partition_;
    data::PointSet test_grid_;
    std::vector<double> test_reference_;
    std::size_t max_chunk_;
};

// --- Inverse diffusion-reaction -------------------------------------------------

class InverseDrProblem final : public fed::FederatedProblem {
public:
    InverseDrProblem(nn::MlpSpec u_spec, nn::MlpSpec k_spec, int observations,
                     int residual_points, std::size_t max_chunk)
        : name_("inverse-dr"), u_spec_(std::move(u_spec)), k_spec_(std::move(k_spec)),
          max_chunk_(max_chunk) {
        // Reference solution from the BVP oracle with the exact k(x).
        bvp_ = solvers::solve_dr_bvp(solvers::inverse_dr_exact_k,
                                     [](double x) { return std::sin(2.0 * kPi * x); });
        const int grid_n = static_cast<int>(bvp_.values.size());
        obs_points_ = data::PointSet(1);
        obs_values_.clear();
        for (int i = 0; i < observations; ++i) {
            const int idx = static_cast<int>(std::llround(
                static_cast<double>(i) * (grid_n - 1) / (observations - 1)));
            obs_points_.push_back(static_cast<double>(idx) / (grid_n - 1));
            obs_values_.push_back(bvp_.values[static_cast<std::size_t>(idx)]);
        }
        residual_points_.clear();
        for (int j = 0; j < residual_points; ++j)
            residual_points_.push_back(static_cast<double>(j + 1) / (residual_points + 1));

        // u metric on a 201-node subgrid of the oracle, k metric vs exact k.
        metric_grid_ = data::PointSet(1);
        for (int i = 0; i < grid_n; i += 5)
            metric_grid_.push_back(static_cast<double>(i) / (grid_n - 1));
    }

    const std::string& name() const override { return name_; }
    std::size_t param_count() const override {
        return u_spec_.param_count() + k_spec_.param_count();
    }
    std::vector<fed::ParamBlock> param_blocks() const override {
        auto blocks = mlp_blocks(u_spec_, "u.", 0);
        auto kb = mlp_blocks(k_spec_, "k.", u_spec_.param_count());
        blocks.insert(blocks.end(), kb.begin(), kb.end());
        return blocks;
    }
    std::vector<double> initial_params(std::uint64_t seed) const override {
        nn::MlpSpec us = u_spec_;
        us.seed = substream("init-u", seed);
        nn::MlpSpec ks = k_spec_;
        ks.seed = substream("init-k", seed);
        auto flat = nn::init_glorot(us).flatten();
        auto kf = nn::init_glorot(ks).flatten();
        flat.insert(flat.end(), kf.begin(), kf.end());
        return flat;
    }

    std::vector<data::Shard> make_shards(int n, int clients) const override {
        return data::partition_1d(obs_points_, obs_values_, n, clients);
    }

    std::unique_ptr<fed::ClientLoss> make_loss(const data::Shard& shard) const override {
        if (!shard.labels)
            throw UsageError("inverse-dr: shard carries no observations");
        std::vector<double> rows;
        for (std::size_t i = 0; i < shard.points.size(); ++i) {
            rows.push_back(shard.points.point(i)[0]);
            rows.push_back((*shard.labels)[i]);
        }
        const nn::MlpSpec u_spec = u_spec_;
        const nn::MlpSpec k_spec = k_spec_;
        const std::size_t u_count = u_spec_.param_count();
        auto per_sample = [u_spec, u_count](ad::Tape& t, std::span<const ad::Var> params,
                                            std::span<const ad::Var> sample) {
            std::array<ad::Var, 1> coords{sample[0]};
            ad::Var n = nn::mlp_forward(t, u_spec, params.first(u_count), coords)[0];
            ad::Var u = coords[0] * (1.0 - coords[0]) * n;
            ad::Var diff = u - sample[1];
            return diff * diff;
        };
        const std::vector<double> res_pts = residual_points_;
        auto shared = [u_spec, k_spec, u_count, res_pts](ad::Tape& t,
                                                         std::span<const ad::Var> params) {
            auto u_field = [&](ad::Tape& tt, std::span<const ad::Var> c) {
                ad::Var n = nn::mlp_forward(tt, u_spec, params.first(u_count), c)[0];
                return c[0] * (1.0 - c[0]) * n;
            };
            auto k_field = [&](ad::Tape& tt, std::span<const ad::Var> c) {
                ad::Var n = nn::mlp_forward(tt, k_spec, params.subspan(u_count), c)[0];
                return ad::softplus(n);
            };
            ad::Var acc = t.constant(0.0);
            for (double xj : res_pts) {
                ad::Var x = t.constant(xj);
                ad::Var r = residual_inverse_dr(t, u_field, k_field, x);
                acc = t.mul_add(r, r, acc);
            }
            return acc / static_cast<double>(res_pts.size());
        };
        return std::make_unique<fed::TapeLoss>(param_count(), std::move(rows), 2,
                                               per_sample, shared, max_chunk_);
    }

    double test_error(std::span<const double> flat) const override {
        const auto u_params = nn::MlpParams::from_flat(u_spec_, flat.first(u_spec_.param_count()));
        const int grid_n = static_cast<int>(bvp_.values.size());
        double diff_sq = 0.0, ref_sq = 0.0;
        for (std::size_t i = 0; i < metric_grid_.size(); ++i) {
            const double x = metric_grid_.point(i)[0];
            const int idx = static_cast<int>(std::llround(x * (grid_n - 1)));
            const double ref = bvp_.values[static_cast<std::size_t>(idx)];
            const double n = nn::mlp_forward_values(u_params, metric_grid_.point(i))[0];
            const double u = hard_bc_inverse_dr_u(x, n);
            diff_sq += (u - ref) * (u - ref);
            ref_sq += ref * ref;
        }
        return std::sqrt(diff_sq / ref_sq);
    }

    std::optional<double> secondary_test_error(std::span<const double> flat) const override {
        const auto k_params =
            nn::MlpParams::from_flat(k_spec_, flat.subspan(u_spec_.param_count()));
        auto approx = [&](std::span<const double> p) {
            return softplus_value(nn::mlp_forward_values(k_params, p)[0]);
        };
        auto ref = [](std::span<const double> p) {
            return solvers::inverse_dr_exact_k(p[0]);
        };
        return l2_relative_error(approx, ref, metric_grid_);
    }

private:
    std::string name_;
    nn::MlpSpec u_spec_, k_spec_;
    solvers::SolverReport bvp_;
    data::PointSet obs_points_;
    std::vector<double> obs_values_;
    std::vector<double> residual_points_;
    data::PointSet metric_grid_;
    std::size_t max_chunk_;
};

data::PointSet hammersley_scaled(int count, double x0, double x1, double y0, double y1) {
    auto unit = data::hammersley(count);
    data::PointSet pts(2);
    for (std::size_t i = 0; i < unit.size(); ++i) {
        auto p = unit.point(i);
        pts.push_back(x0 + (x1 - x0) * p[0], y0 + (y1 - y0) * p[1]);
    }
    return pts;
}

data::PointSet grid2d(double x0, double x1, double y0, double y1, int nx, int ny) {
    data::PointSet pts(2);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            pts.push_back(x0 + (x1 - x0) * i / (nx - 1), y0 + (y1 - y0) * j / (ny - 1));
    return pts;
}

} // namespace

std::vector<std::string> problem_names() {
    return {"gramacy", "schaffer", "poisson1d", "helmholtz2d", "allen-cahn", "inverse-dr"};
}

std::unique_ptr<fed::FederatedProblem> make_problem(const std::string& name,
                                                    const ProblemOptions& opts) {
    const auto hidden_or = [&](std::vector<int> fallback) {
        return opts.hidden.empty() ? fallback : opts.hidden;
    };

    if (name == "gramacy") {
        const int count = opts.points > 0 ? opts.points : 200;
        auto pts = linspace_points(-1.0, 1.0, count);
        std::vector<double> labels;
        for (std::size_t i = 0; i < pts.size(); ++i)
            labels.push_back(solvers::gramacy_lee(pts.point(i)[0]));
        const int tg = opts.test_grid > 0 ? opts.test_grid : 1001;
        return std::make_unique<RegressionProblem>(
            "gramacy", make_spec(1, hidden_or({64, 64, 64}), 1, nn::Activation::Tanh),
            std::move(pts), std::move(labels), data::PartitionKind::OneD,
            [](std::span<const double> p) { return solvers::gramacy_lee(p[0]); },
            linspace_points(-1.0, 1.0, tg), opts.max_chunk);
    }
    if (name == "schaffer") {
        const int count = opts.points > 0 ? opts.points : 256;
        auto pts = hammersley_scaled(count, 0.0, 1.0, 0.0, 1.0);
        std::vector<double> labels;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            auto p = pts.point(i);
            labels.push_back(solvers::schaffer2d(p[0], p[1]));
        }
        const int tg = opts.test_grid > 0 ? opts.test_grid : 33;
        return std::make_unique<RegressionProblem>(
            "schaffer", make_spec(2, hidden_or({64, 64, 64}), 1, nn::Activation::Tanh),
            std::move(pts), std::move(labels), data::PartitionKind::TwoDX,
            [](std::span<const double> p) { return solvers::schaffer2d(p[0], p[1]); },
            grid2d(0.0, 1.0, 0.0, 1.0, tg, tg), opts.max_chunk);
    }
    if (name == "poisson1d") {
        const int count = opts.interior_points > 0 ? opts.interior_points : 32;
        auto colloc = linspace_points(0.0, kPi, count);
        const int tg = opts.test_grid > 0 ? opts.test_grid : 201;
        auto grid = linspace_points(0.0, kPi, tg);
        std::vector<double> ref;
        for (std::size_t i = 0; i < grid.size(); ++i)
            ref.push_back(solvers::poisson1d_exact(grid.point(i)[0]));
        return std::make_unique<PinnProblem>(
            "poisson1d", make_spec(1, hidden_or({20, 20, 20}), 1, nn::Activation::Tanh),
            Pde::Poisson1d, std::move(colloc), data::PartitionKind::OneD, std::move(grid),
            std::move(ref), opts.max_chunk);
    }
    if (name == "helmholtz2d") {
        const int per_dir = opts.interior_points > 0 ? opts.interior_points : 24;
        auto colloc = hammersley_scaled(per_dir * per_dir, 0.0, 1.0, 0.0, 1.0);
        const int tg = opts.test_grid > 0 ? opts.test_grid : 33;
        auto grid = grid2d(0.0, 1.0, 0.0, 1.0, tg, tg);
        std::vector<double> ref;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            auto p = grid.point(i);
            ref.push_back(solvers::helmholtz2d_exact(p[0], p[1]));
        }
        return std::make_unique<PinnProblem>(
            "helmholtz2d", make_spec(2, hidden_or({64, 64, 64}), 1, nn::Activation::Sin),
            Pde::Helmholtz2d, std::move(colloc), data::PartitionKind::TwoDXY,
            std::move(grid), std::move(ref), opts.max_chunk);
    }
    if (name == "allen-cahn") {
        const int interior = opts.interior_points > 0 ? opts.interior_points : 8000;
        const int boundary = std::max(4, interior / 20);  // 400 at the default
        const int initial = std::max(4, interior / 10);   // 800 at the default
        data::PointSet colloc(2);
        auto inner = hammersley_scaled(interior, -1.0, 1.0, 0.0, 1.0);
        colloc.values = inner.values;
        for (int i = 0; i < boundary / 2; ++i) {
            const double t = static_cast<double>(i) / (boundary / 2 - 1);
            colloc.push_back(-1.0, t);
            colloc.push_back(1.0, t);
        }
        for (int i = 0; i < initial; ++i)
            colloc.push_back(-1.0 + 2.0 * i / (initial - 1), 0.0);

        solvers::AllenCahnOptions ac;
        auto ref_run = solvers::solve_allen_cahn(ac);
        data::PointSet grid(2);
        std::vector<double> ref;
        for (int s = 0; s < ac.nt_out; s += 10) {
            const double t = static_cast<double>(s) / (ac.nt_out - 1);
            for (int i = 0; i < ac.nx; i += 8) {
                grid.push_back(-1.0 + 2.0 * i / (ac.nx - 1), t);
                ref.push_back(ref_run.values[static_cast<std::size_t>(s) * ac.nx + i]);
            }
        }
        const std::size_t chunk = opts.max_chunk > 0 ? opts.max_chunk : 64;
        return std::make_unique<PinnProblem>(
            "allen-cahn", make_spec(2, hidden_or({64, 64, 64}), 1, nn::Activation::Sin),
            Pde::AllenCahn, std::move(colloc), data::PartitionKind::TwoDX, std::move(grid),
            std::move(ref), chunk);
    }
    if (name == "inverse-dr") {
        nn::MlpSpec u_spec = make_spec(1, hidden_or({20, 20, 20}), 1, nn::Activation::Tanh);
        nn::MlpSpec k_spec = make_spec(1, hidden_or({20, 20, 20}), 1, nn::Activation::Tanh);
        const int obs = opts.points > 0 ? opts.points : 24;
        const int res = opts.interior_points > 0 ? opts.interior_points : 10;
        return std::make_unique<InverseDrProblem>(std::move(u_spec), std::move(k_spec),
                                                  obs, res, opts.max_chunk);
    }
    throw UsageError("unknown problem '" + name + "'");
}

} // namespace fedsciml::pde
