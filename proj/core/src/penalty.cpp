#include "rbsde/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "implicit_step.hpp"
#include "rbsde/error.hpp"

namespace rbsde {

namespace {
constexpr const char* kModule = "penalty_solver";
}

SolutionTriple solve_penalized(const Lattice& lattice, const ProblemSpec& spec, double n,
                               const SnellOptions& options) {
    if (!(n >= 0.0) || !std::isfinite(n)) {
        throw InvalidArgument(kModule, fmt::format("penalty intensity must be >= 0, got {}", n));
    }
    require_contraction(spec, lattice.grid(), kModule);
    const int steps = lattice.n_steps();
    const double dt = lattice.grid().dt();
    SolutionTriple sol(lattice.grid());

    for (int j = 0; j <= steps; ++j) sol.y[steps][j] = spec.g(lattice.state(steps, j));

    for (int k = steps - 1; k >= 0; --k) {
        const double t = lattice.grid().time(k);
        const auto xs = lattice.states(k);
        const auto e = lattice.expectation(k, sol.y[k + 1]);
        sol.z[k] = estimate_z(lattice, sol.y[k + 1], k);
        for (int j = 0; j <= k; ++j) {
            const double x = xs[j];
            const double z = sol.z[k][j];
            const double h = spec.h(t, x);
            const double above = detail::implicit_fixed_point(spec, t, x, z, e[j], dt, 1.0,
                                                              options.fixed_point_tol,
                                                              options.max_iterations, kModule);
            if (above >= h) {
                sol.y[k][j] = above;
                sol.dk[k][j] = 0.0;
                continue;
            }
            const double below = detail::implicit_fixed_point(spec, t, x, z, e[j] + n * dt * h, dt,
                                                              1.0 + n * dt, options.fixed_point_tol,
                                                              options.max_iterations, kModule);
            // Monotonicity of y - dt f(y) - n dt (y-h)^- puts the root in [above, h].
            if (below > h + 1e-9 * std::max(1.0, std::abs(h))) {
                throw ConvergenceError(kModule, fmt::format("no consistent penalty branch at k={} j={} "
                                                            "(y={}, h={})",
                                                            k, j, below, h));
            }
            sol.y[k][j] = below;
            sol.dk[k][j] = n * dt * std::max(h - below, 0.0);
        }
    }
    return sol;
}

std::vector<double> default_schedule() {
    std::vector<double> s;
    for (int i = 0; i <= 10; ++i) s.push_back(std::ldexp(1.0, i));
    return s;
}

double penalization_bound_quantity(const SolutionTriple& sol, const LatticePathSet& paths,
                                   const LpExponent& p) {
    const int n = sol.n_steps();
    const Table y = gather(sol.y, paths, 0, n);
    const Table z = gather(sol.z, paths, 0, n - 1);
    Table kt(paths.size(), 1);
    for (std::size_t i = 0; i < paths.size(); ++i) kt(i, 0) = sol.k_along(paths.nodes[i]).back();
    const double sy = sp_norm(y, p, paths.weights);
    const double mz = mp_norm(z, sol.grid.dt(), p, paths.weights);
    const double sk = sp_norm(kt, p, paths.weights);
    return std::pow(sy, p.p()) + std::pow(mz, p.p()) + std::pow(sk, p.p());
}

PenalizationTrace run_sweep(const Lattice& lattice, const ProblemSpec& spec,
                            const std::vector<double>& schedule, const SweepOptions& options) {
    if (schedule.empty()) throw InvalidArgument(kModule, "empty penalty schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] >= 0.0)) {
            throw InvalidArgument(kModule, fmt::format("penalty schedule entry {} is negative", schedule[i]));
        }
        if (i > 0 && !(schedule[i] > schedule[i - 1])) {
            throw InvalidArgument(kModule, "penalty schedule must be strictly increasing");
        }
    }

    const int steps = lattice.n_steps();
    const auto snell = solve_snell(lattice, spec);
    const auto prob = lattice.node_probabilities();

    PenalizationTrace tr;
    tr.n_values = schedule;
    tr.paths = lattice_paths(lattice, options.paths);
    tr.snell_y0 = snell.triple.y0();
    for (int k = 0; k < steps; ++k) tr.snell_k_t_root += node_expectation(prob, snell.triple.dk, k);

    const std::size_t m = schedule.size();
    std::vector<std::optional<SolutionTriple>> solved(m);
    const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(m)));
    if (threads == 1) {
        for (std::size_t i = 0; i < m; ++i) solved[i] = solve_penalized(lattice, spec, schedule[i]);
    } else {
        std::vector<std::exception_ptr> errors(m);
        {
            std::vector<std::jthread> pool;
            for (int t = 0; t < threads; ++t) {
                pool.emplace_back([&, t] {
                    for (std::size_t i = t; i < m; i += threads) {
                        try {
                            solved[i] = solve_penalized(lattice, spec, schedule[i]);
                        } catch (...) {
                            errors[i] = std::current_exception();
                        }
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    for (auto& s : solved) tr.solutions.push_back(std::move(*s));

    for (std::size_t i = 0; i < m; ++i) {
        const auto& sol = tr.solutions[i];
        tr.y0.push_back(sol.y0());

        NodeField gap = make_node_field(steps);
        NodeField neg = make_node_field(steps);
        NodeField sk_terms = make_node_field(steps);
        double dom = 0.0;
        double mono = 0.0;
        double kt = 0.0;
        for (int k = 0; k <= steps; ++k) {
            const double t = lattice.grid().time(k);
            for (int j = 0; j <= k; ++j) {
                const double y = sol.y[k][j];
                const double h = spec.h(t, lattice.state(k, j));
                gap[k][j] = y - snell.triple.y[k][j];
                neg[k][j] = std::max(h - y, 0.0);
                sk_terms[k][j] = (y - h) * sol.dk[k][j];
                dom = std::max(dom, gap[k][j]);
                if (i + 1 < m) mono = std::max(mono, y - tr.solutions[i + 1].y[k][j]);
            }
            if (k < steps) kt += node_expectation(prob, sol.dk, k);
        }
        tr.sup_gap.push_back(sp_norm(gather(gap, tr.paths, 0, steps), spec.p, tr.paths.weights));
        tr.negative_part_norm.push_back(sp_norm(gather(neg, tr.paths, 0, steps), spec.p, tr.paths.weights));
        tr.monotonicity_violation.push_back(std::max(mono, 0.0));
        tr.domination_violation.push_back(dom);
        tr.skorokhod_residual.push_back(steps > 0 ? max_abs_path_sum(sk_terms, steps - 1) : 0.0);
        tr.k_t_root.push_back(kt);
        tr.bound_quantity.push_back(penalization_bound_quantity(sol, tr.paths, spec.p));
    }
    return tr;
}

BoundReport check_uniform_bound(const PenalizationTrace& trace, const ProblemSpec& spec) {
    BoundReport r;
    if (trace.size() == 0) throw InvalidArgument(kModule, "empty penalization trace");
    for (const auto& sol : trace.solutions) {
        r.quantity.push_back(penalization_bound_quantity(sol, trace.paths, spec.p));
    }
    const std::size_t half = std::max<std::size_t>(1, (r.quantity.size() + 1) / 2);
    r.reference = *std::max_element(r.quantity.begin(), r.quantity.begin() + half);
    r.limit = 1.05 * r.reference;
    r.worst = *std::max_element(r.quantity.begin(), r.quantity.end());
    r.bounded = r.worst <= r.limit;
    return r;
}

}  // namespace rbsde
