#ifndef RBSDE_PENALTY_HPP
#define RBSDE_PENALTY_HPP

#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/norms.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/snell.hpp"
#include "rbsde/solution.hpp"

namespace rbsde {

/**
 * Penalized discrete BSDE with driver f + n (y - h)^-.
 *
 * Each backward step solves y = E_k[Y_{k+1}] + dt f(t, x, y, z) + n dt (y - h)^-
 * implicitly. The equation is piecewise in y, so both branches (y >= h and
 * y < h) are solved and the consistent one is kept. dK = n dt (y - h)^-.
 * Y is not clipped to the obstacle.
 */
SolutionTriple solve_penalized(const Lattice& lattice, const ProblemSpec& spec, double n,
                               const SnellOptions& options = {});

/// Default penalty schedule 2^0, ..., 2^10.
std::vector<double> default_schedule();

struct SweepOptions {
    PathSetOptions paths;
    int threads = 1;
};

/**
 * Diagnostics of a penalization sweep, one entry per schedule value.
 *
 * Path-functional norms are taken over `paths` (shared by every n, so
 * monotone quantities stay monotone). k_t_root is E[K^n_T] from the root,
 * computed exactly with forward node probabilities.
 */
struct PenalizationTrace {
    std::vector<double> n_values;
    std::vector<SolutionTriple> solutions;
    std::vector<double> y0;
    std::vector<double> sup_gap;                 ///< sp_norm(Y^n - Y_snell)
    std::vector<double> negative_part_norm;      ///< sp_norm((Y^n - h)^-)
    std::vector<double> monotonicity_violation;  ///< max (Y^n - Y^{next n})^+, 0 for the last entry
    std::vector<double> domination_violation;    ///< max (Y^n - Y_snell)^+
    std::vector<double> skorokhod_residual;      ///< max over paths |sum (Y^n - h) dK^n|
    std::vector<double> k_t_root;
    std::vector<double> bound_quantity;          ///< sp(Y)^p + mp(Z)^p + sp(K_T)^p
    double snell_y0 = 0.0;
    double snell_k_t_root = 0.0;
    LatticePathSet paths;

    std::size_t size() const noexcept { return n_values.size(); }
};

/// Throws InvalidArgument unless the schedule is nonempty, strictly increasing and >= 0.
PenalizationTrace run_sweep(const Lattice& lattice, const ProblemSpec& spec,
                            const std::vector<double>& schedule, const SweepOptions& options = {});

struct BoundReport {
    std::vector<double> quantity;
    double reference = 0.0;  ///< max over the first half of the schedule
    double limit = 0.0;      ///< 1.05 * reference
    double worst = 0.0;      ///< max quantity over the whole schedule
    bool bounded = false;
};

/// Checks that sp(Y^n)^p + mp(Z^n)^p + sp(K^n_T)^p does not blow up in n.
BoundReport check_uniform_bound(const PenalizationTrace& trace, const ProblemSpec& spec);

/// sp(Y)^p + mp(Z)^p + sp(K_T)^p of one solution over a path set.
double penalization_bound_quantity(const SolutionTriple& sol, const LatticePathSet& paths,
                                   const LpExponent& p);

}  // namespace rbsde

#endif  // RBSDE_PENALTY_HPP
