#include "rbsde/solution.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rbsde/error.hpp"

namespace rbsde {

std::vector<double> SolutionTriple::k_along(std::span<const int> path) const {
    const int n = n_steps();
    if (static_cast<int>(path.size()) != n + 1) {
        throw InvalidArgument("problem_core", fmt::format("path has {} nodes, expected {}", path.size(), n + 1));
    }
    std::vector<double> k(n + 1, 0.0);
    for (int i = 0; i < n; ++i) k[i + 1] = k[i] + dk[i][path[i]];
    return k;
}

double max_abs_path_sum(const NodeField& terms, int last_step) {
    // hi/lo hold the largest/smallest partial sum from (k, j) to last_step.
    std::vector<double> hi(terms.at(last_step));
    std::vector<double> lo(hi);
    for (int k = last_step - 1; k >= 0; --k) {
        std::vector<double> nhi(k + 1), nlo(k + 1);
        for (int j = 0; j <= k; ++j) {
            nhi[j] = terms[k][j] + std::max(hi[j], hi[j + 1]);
            nlo[j] = terms[k][j] + std::min(lo[j], lo[j + 1]);
        }
        hi = std::move(nhi);
        lo = std::move(nlo);
    }
    return std::max(std::abs(hi[0]), std::abs(lo[0]));
}

ValidationReport validate_solution(const SolutionTriple& sol, const ProblemSpec& spec,
                                   const Lattice& lattice, const ValidationOptions& options) {
    const int n = lattice.n_steps();
    if (!(sol.grid == lattice.grid())) {
        throw InvalidArgument("problem_core", "solution and lattice use different time grids");
    }
    for (const NodeField* f : {&sol.y, &sol.z, &sol.dk}) {
        if (static_cast<int>(f->size()) != n + 1) {
            throw InvalidArgument("problem_core", "solution field has the wrong number of steps");
        }
        for (int k = 0; k <= n; ++k) {
            if (static_cast<int>((*f)[k].size()) != k + 1) {
                throw InvalidArgument("problem_core", fmt::format("solution field step {} has wrong size", k));
            }
        }
    }

    ValidationReport r;
    const double dt = lattice.grid().dt();
    double ymax = 0.0;
    for (const auto& row : sol.y) {
        for (double v : row) ymax = std::max(ymax, std::abs(v));
    }
    r.scale = std::max(1.0, ymax);
    r.tol = options.tol * r.scale;
    r.min_k_increment = n > 0 ? sol.dk[0][0] : 0.0;

    NodeField skorokhod_terms = make_node_field(n);
    for (int k = 0; k <= n; ++k) {
        const double t = lattice.grid().time(k);
        const auto xs = lattice.states(k);
        std::vector<double> e;
        if (k < n) e = lattice.expectation(k, sol.y[k + 1]);
        for (int j = 0; j <= k; ++j) {
            const double y = sol.y[k][j];
            const double h = spec.h(t, xs[j]);
            if (h - y > r.obstacle_violation) {
                r.obstacle_violation = h - y;
                r.obstacle_worst = {k, j};
            }
            if (k == n) {
                r.terminal_residual = std::max(r.terminal_residual, std::abs(y - spec.g(xs[j])));
                continue;
            }
            r.min_k_increment = std::min(r.min_k_increment, sol.dk[k][j]);
            skorokhod_terms[k][j] = (y - h) * sol.dk[k][j];
            const double rhs = e[j] + dt * spec.f(t, xs[j], y, sol.z[k][j]) + sol.dk[k][j];
            r.backward_residual = std::max(r.backward_residual, std::abs(y - rhs));
        }
    }
    r.skorokhod_residual = n > 0 ? max_abs_path_sum(skorokhod_terms, n - 1) : 0.0;
    r.k0 = 0.0;

    r.obstacle_ok = r.obstacle_violation <= r.tol;
    r.k_monotone_ok = r.min_k_increment >= -r.tol;
    r.k0_ok = r.k0 == 0.0;
    r.skorokhod_checked = options.check_skorokhod;
    r.skorokhod_ok = r.skorokhod_residual <= r.tol;
    r.backward_ok = r.backward_residual <= r.tol;
    r.terminal_ok = r.terminal_residual <= r.tol;
    return r;
}

}  // namespace rbsde
