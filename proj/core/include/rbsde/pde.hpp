#ifndef RBSDE_PDE_HPP
#define RBSDE_PDE_HPP

#include <functional>
#include <optional>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"

namespace rbsde {

/**
 * Boundary treatment of the truncated domain.
 *
 * Both modes run the frozen-state scheme (sigma = b = 0) at the two boundary
 * nodes, i.e. v_k = v_{k+1} + dt f(t_k, x_b, v_k, 0) started from g(x_b),
 * with the same reflection/penalty as the interior.
 * dirichlet_obstacle additionally reflects the x_min boundary at h even in
 * the penalized scheme.
 */
enum class BoundaryMode { dirichlet_obstacle, dirichlet_terminal_extrapolation };

struct PdeGrid {
    double x_min = 0.0;
    double x_max = 1.0;
    int m_nodes = 3;
    TimeGrid time{1, 1.0};
    BoundaryMode boundary = BoundaryMode::dirichlet_obstacle;

    double dx() const noexcept { return (x_max - x_min) / (m_nodes - 1); }
    double x(int i) const noexcept { return i == m_nodes - 1 ? x_max : x_min + i * dx(); }
    /// Throws InvalidArgument unless m_nodes >= 3 and x_min < x_max.
    void validate() const;
};

/**
 * Grid whose [x_min, x_max] holds the diffusion started at (t0, x0) with
 * probability >= 1 - tail_prob over [t0, horizon] (Gaussian quantile on the
 * state for arithmetic models, on log-state for geometric ones; the lower
 * end is clipped at 0 for geometric models).
 */
PdeGrid suggest_pde_grid(const ForwardModel& model, double horizon, int m_nodes, int n_steps,
                         double tail_prob = 1e-6);

enum class PdeMethod { projected, penalized };

struct PdeField {
    PdeGrid grid;
    std::vector<std::vector<double>> u;  ///< u[k][i], k = time step, i = space node
    PdeMethod method = PdeMethod::projected;
    double penalty = 0.0;
    long total_iterations = 0;

    /// Bilinear interpolation in (t, x); throws InvalidArgument outside the grid.
    double value_at(double t, double x) const;
};

struct PsorOptions {
    double omega = 1.5;
    double tol = 1e-10;
    int max_iterations = 10000;
};

/**
 * Backward implicit finite differences for -u_t - L u - f = 0 with central
 * differences in x, followed by the projection u >= h inside PSOR.
 * f is evaluated at the previous iterate's (u, sigma u_x). Iteration stops
 * when max |min(u - h, r)| <= tol, r being the dt-scaled step residual.
 * Throws ConvergenceError with worst-node diagnostics after max_iterations.
 */
PdeField solve_pde_projected(const PdeGrid& grid, const ProblemSpec& spec, const ForwardModel& model,
                             const PsorOptions& options = {});

/// Same scheme with driver f + n (u - h)^- and no projection.
PdeField solve_pde_penalized(const PdeGrid& grid, const ProblemSpec& spec, const ForwardModel& model,
                             double n, const PsorOptions& options = {});

/// Complementarity diagnostics of a field over interior nodes, k < N.
struct ComplementarityReport {
    double min_gap = 0.0;        ///< min (u - h)
    double min_residual = 0.0;   ///< min r
    double max_min_term = 0.0;   ///< max |min(u - h, r)|
    double max_product = 0.0;    ///< max (u - h)^+ * |r|
};

ComplementarityReport complementarity(const PdeField& field, const ProblemSpec& spec,
                                      const ForwardModel& model);

struct ProbePoint {
    double t = 0.0;
    double x = 0.0;
};

struct FeynmanKacProbe {
    double t = 0.0;
    double x = 0.0;
    double u = 0.0;       ///< PDE value
    double y = 0.0;       ///< Snell value Y^{t,x}_t
    double abs_err = 0.0;
    double rel_err = 0.0;
};

/**
 * Compares u(t, x) with the lattice solution of the reflected BSDE started
 * at (t, x) with `lattice_steps` steps. At t = T the lattice value is g(x).
 */
std::vector<FeynmanKacProbe> feynman_kac_check(const PdeField& field, const ForwardModel& model,
                                               const ProblemSpec& spec,
                                               const std::vector<ProbePoint>& probes,
                                               int lattice_steps = 2048);

// --- chi supersolution ------------------------------------------------------

/// chi(t,x) = exp[(C(T-t) + A) psi(x)], psi(x) = [ln(sqrt(x^2+1)) + 1]^2.
struct ChiParams {
    double A = 1.0;
    double C = 1.0;
    double T = 1.0;

    double t1() const noexcept { return T - A / C; }
    /// Throws InvalidArgument unless A > 0 and C > 0.
    void validate() const;
};

double chi_psi(double x) noexcept;

struct ChiValue {
    double value = 0.0;
    bool saturated = false;  ///< exponent overflowed; value is DBL_MAX
};

ChiValue chi_value(double t, double x, const ChiParams& params);

/**
 * min over nodes of the discrete operator
 *   -chi_t - (sigma^2/2) chi_xx - b chi_x - kappa chi - kappa |sigma chi_x|
 * divided by chi(t, x) (same sign, no overflow), over interior x nodes of
 * `grid` and time slices t_k in [max(t1, start), T]. Central differences
 * in x with the grid spacing and in t with half-steps of dt.
 */
double chi_operator_min(const ChiParams& params, const ForwardModel& model, double kappa,
                        const PdeGrid& grid);

struct ChiScanReport {
    double A = 0.0;
    double kappa = 0.0;
    std::vector<double> c_grid;
    std::vector<double> min_value;   ///< normalized operator minimum per C
    std::optional<double> witness;   ///< smallest C with a positive minimum
    bool passed = false;
};

/// Scans C over {1, 2, 4, ..., 2^10} (or `c_grid` when given) for a positive minimum.
ChiScanReport chi_supersolution_check(const ChiParams& params, const ForwardModel& model, double kappa,
                                      const PdeGrid& grid, std::vector<double> c_grid = {});

struct GrowthReport {
    std::vector<double> radii;
    std::vector<double> weighted;  ///< |v(r)| exp(-A (ln r)^2)
    bool decreasing = false;       ///< strict decrease over the last three radii
};

/// Throws InvalidArgument unless radii are increasing, >= 2, and at least three.
GrowthReport growth_class_check(const std::function<double(double)>& values, double A,
                                const std::vector<double>& radii);

}  // namespace rbsde

#endif  // RBSDE_PDE_HPP
