#ifndef RBSDE_ESTIMATES_HPP
#define RBSDE_ESTIMATES_HPP

#include <string>

#include "rbsde/lattice.hpp"
#include "rbsde/norms.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/solution.hpp"

namespace rbsde {

// Empirical versions of the L^p a priori estimates. The constants in these
// inequalities exist but are never explicit, so each check reports the
// ratio lhs / rhs and callers gate it against a recorded baseline.
//
// Node functionals (E|xi|^p) are exact lattice expectations. Path functionals
// (running suprema, time integrals, K_T) are averaged over a LatticePathSet:
// all paths with exact weights when N <= 16, a fixed-seed sample otherwise.

struct EstimateReport {
    std::string kind;      ///< "y", "z" or "k"
    std::string instance;
    double p = 1.5;
    double lhs = 0.0;
    double rhs_data_functional = 0.0;
    double empirical_ratio = 0.0;  ///< 0 when lhs == 0, +inf when only rhs == 0
};

struct StabilityReport {
    double lhs = 0.0;              ///< E sup |dY|^p
    double delta_y_norm = 0.0;     ///< lhs^{1/p}
    double delta_y_max = 0.0;      ///< max over nodes |dY|
    double delta_data = 0.0;       ///< E|dxi|^p + E(int |df(s, Y_s, Z_s)| ds)^p
    double delta_l = 0.0;          ///< E sup |dL|^p
    double psi_T = 0.0;
    double rhs = 0.0;              ///< delta_data + psi_T^{1/p} delta_l^{(p-1)/p}
    double ratio = 0.0;
    bool identical_data = false;   ///< dxi, df, dL all zero
    bool uniqueness_ok = true;     ///< identical data implies delta_y_max <= 1e-12
};

/// E sup|Y|^p against E|xi|^p + E(int|f(s,0,0)|ds)^p + E sup (L^+)^p.
/// Throws InvalidArgument when the solution fails the Skorokhod condition.
EstimateReport check_y_estimate(const SolutionTriple& sol, const ProblemSpec& spec, const Lattice& lattice,
                                const PathSetOptions& paths = {});

/// E(int |Z|^2 dt)^{p/2} against E sup|Y|^p + E(int|f(s,0,0)|ds)^p.
EstimateReport check_z_estimate(const SolutionTriple& sol, const ProblemSpec& spec, const Lattice& lattice,
                                const PathSetOptions& paths = {});

/// E K_T^p against E sup|Y|^p + E(int|f(s,0,0)|ds)^p.
EstimateReport check_k_estimate(const SolutionTriple& sol, const ProblemSpec& spec, const Lattice& lattice,
                                const PathSetOptions& paths = {});

/// Stability of solutions to perturbed data on a shared lattice.
/// Throws InvalidArgument when either solution lives on another grid.
StabilityReport check_stability(const SolutionTriple& sol_a, const SolutionTriple& sol_b,
                                const ProblemSpec& spec_a, const ProblemSpec& spec_b, const Lattice& lattice,
                                const PathSetOptions& paths = {});

/// E|xi|^p + E(int|f(s,0,0)|ds)^p + E sup (L^+)^p for one data triple.
double data_functional(const ProblemSpec& spec, const Lattice& lattice, const LatticePathSet& paths);

}  // namespace rbsde

#endif  // RBSDE_ESTIMATES_HPP
