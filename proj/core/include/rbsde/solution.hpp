#ifndef RBSDE_SOLUTION_HPP
#define RBSDE_SOLUTION_HPP

#include <span>
#include <string>

#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/table.hpp"

namespace rbsde {

/**
 * Discrete solution (Y, Z, K) on lattice nodes.
 *
 * K is path-dependent on a recombining lattice, so the node-indexed
 * quantity is its increment: dk[k][j] = K_{k+1} - K_k along any path
 * through node (k, j). K_0 = 0 and K_k = sum_{i<k} dk[i][j_i] along a path.
 * z[N] and dk[N] are zero.
 */
struct SolutionTriple {
    TimeGrid grid;
    NodeField y;
    NodeField z;
    NodeField dk;

    explicit SolutionTriple(const TimeGrid& g)
        : grid(g), y(make_node_field(g.n_steps())), z(make_node_field(g.n_steps())),
          dk(make_node_field(g.n_steps())) {}

    int n_steps() const noexcept { return grid.n_steps(); }
    double y0() const { return y[0][0]; }

    /// Cumulative K_0..K_N along a node path.
    std::vector<double> k_along(std::span<const int> path) const;

    bool operator==(const SolutionTriple&) const = default;
};

struct NodeIndex {
    int k = -1;
    int j = -1;
};

struct ValidationOptions {
    double tol = 1e-10;             ///< relative to max(1, max |Y|)
    bool check_skorokhod = true;    ///< false for penalized solutions
};

/// Per-item results of the discrete solution contract.
struct ValidationReport {
    double obstacle_violation = 0.0;  ///< max (h - Y)^+
    NodeIndex obstacle_worst;         ///< node attaining it (k = -1 when none)
    double min_k_increment = 0.0;     ///< min dk over k < N
    double k0 = 0.0;
    double skorokhod_residual = 0.0;  ///< max over paths of |sum_k (Y_k - L_k) dK_k|
    double backward_residual = 0.0;   ///< max |Y_k - (E_k Y_{k+1} + f dt + dK_k)|
    double terminal_residual = 0.0;   ///< max |Y_N - g(X_N)|
    double scale = 1.0;
    double tol = 0.0;

    bool obstacle_ok = false;
    bool k_monotone_ok = false;
    bool k0_ok = false;
    bool skorokhod_ok = false;
    bool skorokhod_checked = true;
    bool backward_ok = false;
    bool terminal_ok = false;

    bool all_pass() const noexcept {
        return obstacle_ok && k_monotone_ok && k0_ok && (skorokhod_ok || !skorokhod_checked) &&
               backward_ok && terminal_ok;
    }
};

/// Throws InvalidArgument when the triple's shape does not match the lattice.
ValidationReport validate_solution(const SolutionTriple& sol, const ProblemSpec& spec,
                                   const Lattice& lattice, const ValidationOptions& options = {});

/**
 * Largest |sum_k w_k| over all lattice paths for a node field w of
 * per-step terms, computed by a max/min path-sum recursion (no enumeration).
 */
double max_abs_path_sum(const NodeField& terms, int last_step);

}  // namespace rbsde

#endif  // RBSDE_SOLUTION_HPP
