#include "rbsde/pde.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include <fmt/format.h>

#include "implicit_step.hpp"
#include "rbsde/error.hpp"
#include "rbsde/snell.hpp"

namespace rbsde {

namespace {

constexpr const char* kModule = "obstacle_pde";

// Two-sided standard normal quantile: z with P(|N| > z) = tail.
double normal_two_sided_quantile(double tail) {
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::erfc(mid / std::sqrt(2.0)) > tail) lo = mid;
        else hi = mid;
    }
    return hi;
}

struct StepCoefficients {
    std::vector<double> lower, diag, upper, sigma, h;
};

StepCoefficients coefficients(const PdeGrid& grid, const ProblemSpec& spec, const ForwardModel& model,
                              double t, double dt) {
    const int m = grid.m_nodes;
    const double dx = grid.dx();
    StepCoefficients c{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m),
                       std::vector<double>(m), std::vector<double>(m)};
    for (int i = 0; i < m; ++i) {
        const double x = grid.x(i);
        const double s = model.sigma(t, x);
        const double a = 0.5 * s * s;
        const double b = model.b(t, x);
        c.sigma[i] = s;
        c.h[i] = spec.h(t, x);
        c.lower[i] = -dt * (a / (dx * dx) - b / (2.0 * dx));
        c.diag[i] = 1.0 + 2.0 * dt * a / (dx * dx);
        c.upper[i] = -dt * (a / (dx * dx) + b / (2.0 * dx));
    }
    return c;
}

class TimeStepper {
public:
    TimeStepper(const PdeGrid& grid, const ProblemSpec& spec, const ForwardModel& model,
                PdeMethod method, double penalty, const PsorOptions& options)
        : grid_(grid), spec_(spec), model_(model), method_(method), n_(penalty), opt_(options) {}

    // Solves one backward step; `next` is u at t_{k+1}, result written to `u`.
    long step(int k, const std::vector<double>& next, std::vector<double>& u) const {
        const double dt = grid_.time.dt();
        const double t = grid_.time.time(k);
        const auto c = coefficients(grid_, spec_, model_, t, dt);
        const int m = grid_.m_nodes;
        const double dx = grid_.dx();

        u = next;
        u.front() = boundary_value(t, 0, next.front(), c.h.front(), true);
        u.back() = boundary_value(t, m - 1, next.back(), c.h.back(), false);
        if (method_ == PdeMethod::projected) {
            for (int i = 1; i < m - 1; ++i) u[i] = std::max(u[i], c.h[i]);
        }

        std::vector<double> f(m, 0.0);
        auto eval_f = [&] {
            for (int i = 1; i < m - 1; ++i) {
                const double z = c.sigma[i] * (u[i + 1] - u[i - 1]) / (2.0 * dx);
                f[i] = spec_.f(t, grid_.x(i), u[i], z);
            }
        };
        auto residual = [&](int i) {
            double r = c.diag[i] * u[i] + c.lower[i] * u[i - 1] + c.upper[i] * u[i + 1] - next[i] - dt * f[i];
            if (method_ == PdeMethod::penalized) r -= n_ * dt * std::max(c.h[i] - u[i], 0.0);
            return r;
        };

        eval_f();
        for (int it = 1; it <= opt_.max_iterations; ++it) {
            for (int i = 1; i < m - 1; ++i) {
                const double rest = next[i] + dt * f[i] - c.lower[i] * u[i - 1] - c.upper[i] * u[i + 1];
                double target = rest / c.diag[i];
                if (method_ == PdeMethod::penalized && target < c.h[i]) {
                    target = (rest + n_ * dt * c.h[i]) / (c.diag[i] + n_ * dt);
                }
                double v = u[i] + opt_.omega * (target - u[i]);
                if (method_ == PdeMethod::projected) v = std::max(v, c.h[i]);
                u[i] = v;
            }
            eval_f();
            double err = 0.0;
            int worst = 1;
            for (int i = 1; i < m - 1; ++i) {
                const double r = residual(i);
                const double e = method_ == PdeMethod::projected ? std::abs(std::min(u[i] - c.h[i], r))
                                                                  : std::abs(r);
                if (e > err) {
                    err = e;
                    worst = i;
                }
            }
            if (err <= opt_.tol) return it;
            if (it == opt_.max_iterations || !std::isfinite(err)) {
                throw ConvergenceError(
                    kModule, fmt::format("PSOR did not converge in {} iterations at t={} (step {}); worst "
                                         "node i={} x={} error={} u={} h={}",
                                         it, t, k, worst, grid_.x(worst), err, u[worst], c.h[worst]));
            }
        }
        return opt_.max_iterations;
    }

private:
    double boundary_value(double t, int i, double next, double h, bool left) const {
        const double dt = grid_.time.dt();
        const double x = grid_.x(i);
        double v = detail::implicit_fixed_point(spec_, t, x, 0.0, next, dt, 1.0, 1e-14, 100, kModule);
        const bool reflect = method_ == PdeMethod::projected ||
                             (left && grid_.boundary == BoundaryMode::dirichlet_obstacle);
        if (reflect) return std::max(v, h);
        if (v < h) {
            v = detail::implicit_fixed_point(spec_, t, x, 0.0, next + n_ * dt * h, dt, 1.0 + n_ * dt, 1e-14,
                                             100, kModule);
        }
        return v;
    }

    const PdeGrid& grid_;
    const ProblemSpec& spec_;
    const ForwardModel& model_;
    PdeMethod method_;
    double n_;
    PsorOptions opt_;
};

PdeField solve(const PdeGrid& grid, const ProblemSpec& spec, const ForwardModel& model, PdeMethod method,
               double penalty, const PsorOptions& options) {
    grid.validate();
    model.validate();
    require_contraction(spec, grid.time, kModule);
    if (!(options.omega > 0.0 && options.omega < 2.0)) {
        throw InvalidArgument(kModule, fmt::format("PSOR relaxation must lie in (0,2), got {}", options.omega));
    }
    const int n = grid.time.n_steps();
    const int m = grid.m_nodes;
    PdeField field{grid, std::vector<std::vector<double>>(n + 1, std::vector<double>(m)), method, penalty, 0};
    for (int i = 0; i < m; ++i) field.u[n][i] = spec.g(grid.x(i));

    const TimeStepper stepper(grid, spec, model, method, penalty, options);
    for (int k = n - 1; k >= 0; --k) field.total_iterations += stepper.step(k, field.u[k + 1], field.u[k]);
    return field;
}

}  // namespace

void PdeGrid::validate() const {
    if (m_nodes < 3) throw InvalidArgument(kModule, fmt::format("m_nodes must be >= 3, got {}", m_nodes));
    if (!(x_min < x_max)) {
        throw InvalidArgument(kModule, fmt::format("x_min={} must be below x_max={}", x_min, x_max));
    }
}

PdeGrid suggest_pde_grid(const ForwardModel& model, double horizon, int m_nodes, int n_steps,
                         double tail_prob) {
    const double tau = horizon - model.t0;
    const double z = normal_two_sided_quantile(tail_prob);
    PdeGrid g;
    g.m_nodes = m_nodes;
    g.time = TimeGrid(n_steps, horizon, model.t0);
    if (model.kind == ModelKind::arithmetic) {
        const double mean = model.x0 + model.drift * tau;
        const double half = std::max(z * model.vol * std::sqrt(tau), 1.0);
        g.x_min = std::min(model.x0, mean) - half;
        g.x_max = std::max(model.x0, mean) + half;
    } else {
        const double centre = std::log(model.x0) + (model.drift - 0.5 * model.vol * model.vol) * tau;
        g.x_min = 0.0;
        g.x_max = std::exp(std::max(std::log(model.x0), centre) + z * model.vol * std::sqrt(tau)) * 1.1;
    }
    g.validate();
    return g;
}

double PdeField::value_at(double t, double x) const {
    const double t0 = grid.time.start();
    const double t_end = grid.time.horizon();
    if (t < t0 || t > t_end || x < grid.x_min || x > grid.x_max) {
        throw InvalidArgument(kModule, fmt::format("probe ({}, {}) lies outside the PDE grid", t, x));
    }
    const int n = grid.time.n_steps();
    const double sk = std::min((t - t0) / grid.time.dt(), static_cast<double>(n));
    const int k = std::min(static_cast<int>(std::floor(sk)), n - 1);
    const double wt = sk - k;
    const double si = std::min((x - grid.x_min) / grid.dx(), static_cast<double>(grid.m_nodes - 1));
    const int i = std::min(static_cast<int>(std::floor(si)), grid.m_nodes - 2);
    const double wx = si - i;
    auto at = [&](int kk) { return (1.0 - wx) * u[kk][i] + wx * u[kk][i + 1]; };
    if (wt == 0.0) return at(k);
    return (1.0 - wt) * at(k) + wt * at(k + 1);
}

PdeField solve_pde_projected(const PdeGrid& grid, const ProblemSpec& spec, const ForwardModel& model,
                             const PsorOptions& options) {
    return solve(grid, spec, model, PdeMethod::projected, 0.0, options);
}

PdeField solve_pde_penalized(const PdeGrid& grid, const ProblemSpec& spec, const ForwardModel& model,
                             double n, const PsorOptions& options) {
    if (!(n >= 0.0) || !std::isfinite(n)) {
        throw InvalidArgument(kModule, fmt::format("penalty intensity must be >= 0, got {}", n));
    }
    return solve(grid, spec, model, PdeMethod::penalized, n, options);
}

ComplementarityReport complementarity(const PdeField& field, const ProblemSpec& spec,
                                      const ForwardModel& model) {
    const auto& grid = field.grid;
    const int n = grid.time.n_steps();
    const int m = grid.m_nodes;
    const double dt = grid.time.dt();
    const double dx = grid.dx();
    ComplementarityReport rep;
    bool first = true;
    for (int k = 0; k < n; ++k) {
        const double t = grid.time.time(k);
        const auto c = coefficients(grid, spec, model, t, dt);
        const auto& u = field.u[k];
        const auto& next = field.u[k + 1];
        for (int i = 1; i < m - 1; ++i) {
            const double z = c.sigma[i] * (u[i + 1] - u[i - 1]) / (2.0 * dx);
            double r = c.diag[i] * u[i] + c.lower[i] * u[i - 1] + c.upper[i] * u[i + 1] - next[i] -
                       dt * spec.f(t, grid.x(i), u[i], z);
            if (field.method == PdeMethod::penalized) r -= field.penalty * dt * std::max(c.h[i] - u[i], 0.0);
            const double gap = u[i] - c.h[i];
            if (first) {
                rep.min_gap = gap;
                rep.min_residual = r;
                first = false;
            }
            rep.min_gap = std::min(rep.min_gap, gap);
            rep.min_residual = std::min(rep.min_residual, r);
            rep.max_min_term = std::max(rep.max_min_term, std::abs(std::min(gap, r)));
            rep.max_product = std::max(rep.max_product, std::max(gap, 0.0) * std::abs(r));
        }
    }
    return rep;
}

std::vector<FeynmanKacProbe> feynman_kac_check(const PdeField& field, const ForwardModel& model,
                                               const ProblemSpec& spec,
                                               const std::vector<ProbePoint>& probes, int lattice_steps) {
    std::vector<FeynmanKacProbe> out;
    const double t_end = field.grid.time.horizon();
    for (const auto& pr : probes) {
        FeynmanKacProbe r{pr.t, pr.x, field.value_at(pr.t, pr.x), 0.0, 0.0, 0.0};
        if (pr.t >= t_end) {
            r.y = spec.g(pr.x);
        } else {
            const auto lattice = build_lattice(model.started_at(pr.t, pr.x), TimeGrid(lattice_steps, t_end, pr.t));
            r.y = solve_snell(lattice, spec).triple.y0();
        }
        r.abs_err = std::abs(r.u - r.y);
        r.rel_err = r.y != 0.0 ? r.abs_err / std::abs(r.y) : r.abs_err;
        out.push_back(r);
    }
    return out;
}

void ChiParams::validate() const {
    if (!(A > 0.0) || !(C > 0.0)) {
        throw InvalidArgument(kModule, fmt::format("chi needs A > 0 and C > 0, got A={} C={}", A, C));
    }
}

double chi_psi(double x) noexcept {
    const double l = 0.5 * std::log1p(x * x) + 1.0;
    return l * l;
}

ChiValue chi_value(double t, double x, const ChiParams& params) {
    const double exponent = (params.C * (params.T - t) + params.A) * chi_psi(x);
    if (exponent > std::log(DBL_MAX)) return {DBL_MAX, true};
    return {std::exp(exponent), false};
}

double chi_operator_min(const ChiParams& params, const ForwardModel& model, double kappa,
                        const PdeGrid& grid) {
    params.validate();
    grid.validate();
    const double dt = grid.time.dt();
    const double dx = grid.dx();
    const double t_lo = std::max(params.t1(), grid.time.start());
    double best = INFINITY;
    for (int k = 0; k <= grid.time.n_steps(); ++k) {
        const double t = grid.time.time(k);
        if (t < t_lo - 1e-12) continue;
        const double lambda = params.C * (params.T - t) + params.A;
        for (int i = 1; i < grid.m_nodes - 1; ++i) {
            const double x = grid.x(i);
            const double psi = chi_psi(x);
            // Ratios chi(neighbour)/chi(t,x); the common factor cancels.
            const double time_term = 2.0 * std::sinh(0.5 * params.C * dt * psi) / dt;
            const double rp = std::exp(lambda * (chi_psi(x + dx) - psi));
            const double rm = std::exp(lambda * (chi_psi(x - dx) - psi));
            const double d1 = (rp - rm) / (2.0 * dx);
            const double d2 = (rp - 2.0 + rm) / (dx * dx);
            const double s = model.sigma(t, x);
            const double value = time_term - 0.5 * s * s * d2 - model.b(t, x) * d1 - kappa - kappa * std::abs(s * d1);
            best = std::min(best, value);
        }
    }
    return best;
}

ChiScanReport chi_supersolution_check(const ChiParams& params, const ForwardModel& model, double kappa,
                                      const PdeGrid& grid, std::vector<double> c_grid) {
    if (c_grid.empty()) {
        for (int i = 0; i <= 10; ++i) c_grid.push_back(std::ldexp(1.0, i));
    }
    ChiScanReport rep;
    rep.A = params.A;
    rep.kappa = kappa;
    rep.c_grid = c_grid;
    for (double c : c_grid) {
        ChiParams p = params;
        p.C = c;
        const double v = chi_operator_min(p, model, kappa, grid);
        rep.min_value.push_back(v);
        if (v > 0.0 && !rep.witness) rep.witness = c;
    }
    rep.passed = rep.witness.has_value();
    return rep;
}

GrowthReport growth_class_check(const std::function<double(double)>& values, double A,
                                const std::vector<double>& radii) {
    if (radii.size() < 3) throw InvalidArgument(kModule, "growth check needs at least three radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] >= 2.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
            throw InvalidArgument(kModule, "growth radii must be increasing and >= 2");
        }
    }
    GrowthReport rep;
    rep.radii = radii;
    for (double r : radii) {
        const double l = std::log(r);
        rep.weighted.push_back(std::exp(std::log(std::abs(values(r))) - A * l * l));
    }
    const std::size_t n = rep.weighted.size();
    rep.decreasing = rep.weighted[n - 3] > rep.weighted[n - 2] && rep.weighted[n - 2] > rep.weighted[n - 1];
    return rep;
}

}  // namespace rbsde
