#ifndef RBSDE_SNELL_HPP
#define RBSDE_SNELL_HPP

#include <span>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/solution.hpp"

namespace rbsde {

struct SnellOptions {
    double fixed_point_tol = 1e-14;  ///< relative step size that stops the one-step iteration
    int max_iterations = 100;
    double exercise_tol = 1e-12;     ///< absolute tie tolerance for exercise labels
};

/**
 * Discrete reflected solution from backward induction.
 *
 * continuation[k][j] is the unreflected one-step value c solving
 * c = E_k[Y_{k+1}] + dt f(t_k, x, c, z); Y = max(h, c). At k = N the
 * continuation is g(x) and the node is labelled exercised iff g = h(T, x).
 */
struct SnellOutput {
    SolutionTriple triple;
    NodeField continuation;
    std::vector<std::vector<char>> exercise;
};

/**
 * Backward induction Y_N = g, Y_k = max(h_k, c_k).
 *
 * Where the obstacle binds, dK_k = h - E_k[Y_{k+1}] - dt f(t_k, x, h, z),
 * so the backward equation Y_k = E_k[Y_{k+1}] + dt f(Y_k, Z_k) + dK_k holds
 * exactly at every node. Requires kappa * dt < 1.
 */
SnellOutput solve_snell(const Lattice& lattice, const ProblemSpec& spec,
                        const SnellOptions& options = {});

/**
 * Delta-hedge estimate Z[k][j] = sigma(t_k, x_kj) * (y_next[j+1] - y_next[j]) /
 * (x_{k+1,j+1} - x_{k+1,j}); zero where the lattice spacing vanishes.
 */
std::vector<double> estimate_z(const Lattice& lattice, std::span<const double> y_next, int k);

/// First step whose node on `path` is in the exercise region, else N.
int optimal_stopping_time(const SnellOutput& out, std::span<const int> path);

/**
 * Optimal value over every stopping rule adapted to the full path history:
 * max_tau E[ sum_{s<tau} f(t_s, X_s) dt + h(tau, X_tau) 1{tau<N} + g(X_N) 1{tau=N} ].
 *
 * Evaluated by exhaustive recursion over the 2^N history tree (no
 * recombination, no shared code with solve_snell). f must not depend on
 * (y, z). Throws InvalidArgument when N > 12.
 */
double brute_force_stopping_value(const Lattice& lattice, const ProblemSpec& spec);

}  // namespace rbsde

#endif  // RBSDE_SNELL_HPP
