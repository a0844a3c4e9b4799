#include "rbsde/snell.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "implicit_step.hpp"
#include "rbsde/error.hpp"

namespace rbsde {

namespace {
constexpr const char* kModule = "snell_solver";
}

std::vector<double> estimate_z(const Lattice& lattice, std::span<const double> y_next, int k) {
    if (k < 0 || k >= lattice.n_steps()) {
        throw InvalidArgument(kModule, fmt::format("estimate_z: no step {} -> {}", k, k + 1));
    }
    if (static_cast<int>(y_next.size()) != k + 2) {
        throw InvalidArgument(kModule, fmt::format("estimate_z at step {} needs {} values, got {}", k,
                                                   k + 2, y_next.size()));
    }
    const double t = lattice.grid().time(k);
    const auto x_now = lattice.states(k);
    const auto x_next = lattice.states(k + 1);
    std::vector<double> z(static_cast<std::size_t>(k) + 1, 0.0);
    for (int j = 0; j <= k; ++j) {
        const double spread = x_next[j + 1] - x_next[j];
        if (spread == 0.0) continue;
        z[j] = (y_next[j + 1] - y_next[j]) / spread * lattice.model().sigma(t, x_now[j]);
    }
    return z;
}

SnellOutput solve_snell(const Lattice& lattice, const ProblemSpec& spec, const SnellOptions& options) {
    require_contraction(spec, lattice.grid(), kModule);
    const int n = lattice.n_steps();
    const double dt = lattice.grid().dt();
    const double t_end = lattice.grid().time(n);

    SnellOutput out{SolutionTriple(lattice.grid()), make_node_field(n), {}};
    out.exercise.resize(n + 1);
    auto& tri = out.triple;

    {
        const auto xs = lattice.states(n);
        out.exercise[n].assign(n + 1, 0);
        for (int j = 0; j <= n; ++j) {
            const double g = spec.g(xs[j]);
            tri.y[n][j] = g;
            out.continuation[n][j] = g;
            out.exercise[n][j] = std::abs(g - spec.h(t_end, xs[j])) <= options.exercise_tol;
        }
    }

    for (int k = n - 1; k >= 0; --k) {
        const double t = lattice.grid().time(k);
        const auto xs = lattice.states(k);
        const auto e = lattice.expectation(k, tri.y[k + 1]);
        tri.z[k] = estimate_z(lattice, tri.y[k + 1], k);
        out.exercise[k].assign(k + 1, 0);
        for (int j = 0; j <= k; ++j) {
            const double x = xs[j];
            const double z = tri.z[k][j];
            const double c = detail::implicit_fixed_point(spec, t, x, z, e[j], dt, 1.0,
                                                          options.fixed_point_tol,
                                                          options.max_iterations, kModule);
            const double h = spec.h(t, x);
            out.continuation[k][j] = c;
            if (c >= h) {
                tri.y[k][j] = c;
                tri.dk[k][j] = 0.0;
            } else {
                tri.y[k][j] = h;
                tri.dk[k][j] = h - e[j] - dt * spec.f(t, x, h, z);
            }
            out.exercise[k][j] = (tri.y[k][j] - h <= options.exercise_tol) && (h > c - options.exercise_tol);
        }
    }
    return out;
}

int optimal_stopping_time(const SnellOutput& out, std::span<const int> path) {
    const int n = out.triple.n_steps();
    if (static_cast<int>(path.size()) != n + 1) {
        throw InvalidArgument(kModule, fmt::format("path has {} nodes, expected {}", path.size(), n + 1));
    }
    for (int k = 0; k < n; ++k) {
        if (out.exercise[k].at(path[k])) return k;
    }
    return n;
}

namespace {

struct HistoryTree {
    const Lattice& lattice;
    const ProblemSpec& spec;
    double dt;
    int n;

    // Value of the best stopping rule from history ending at step k with
    // `ups` up-moves so far. Each call re-explores its entire subtree.
    double value(int k, int ups) const {
        const double x = lattice.state(k, ups);
        if (k == n) return spec.g(x);
        const double t = lattice.grid().time(k);
        const double p = lattice.up_prob(k)[ups];
        const double go_on =
            dt * spec.f(t, x, 0.0, 0.0) + p * value(k + 1, ups + 1) + (1.0 - p) * value(k + 1, ups);
        return std::max(spec.h(t, x), go_on);
    }
};

}  // namespace

double brute_force_stopping_value(const Lattice& lattice, const ProblemSpec& spec) {
    const int n = lattice.n_steps();
    if (n > 12) {
        throw InvalidArgument(kModule, fmt::format("brute force enumeration needs n_steps <= 12, got {}", n));
    }
    const double t0 = lattice.grid().time(0);
    const double x0 = lattice.state(0, 0);
    const double ref = spec.f(t0, x0, 0.0, 0.0);
    for (double y : {-1.0, 1.0}) {
        for (double z : {-1.0, 1.0}) {
            if (spec.f(t0, x0, y, z) != ref) {
                throw InvalidArgument(kModule, "brute force stopping value needs f independent of (y, z)");
            }
        }
    }
    return HistoryTree{lattice, spec, lattice.grid().dt(), n}.value(0, 0);
}

}  // namespace rbsde
