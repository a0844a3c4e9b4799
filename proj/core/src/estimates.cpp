#include "rbsde/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rbsde/error.hpp"

namespace rbsde {

namespace {

constexpr const char* kModule = "estimates_lab";

double ratio_of(double lhs, double rhs) {
    if (lhs == 0.0) return 0.0;
    if (rhs == 0.0) return std::numeric_limits<double>::infinity();
    return lhs / rhs;
}

void require_grid(const SolutionTriple& sol, const Lattice& lattice) {
    if (!(sol.grid == lattice.grid())) {
        throw InvalidArgument(kModule, "solution and lattice use different time grids");
    }
}

void require_skorokhod(const SolutionTriple& sol, const ProblemSpec& spec, const Lattice& lattice) {
    const auto report = validate_solution(sol, spec, lattice);
    if (!report.skorokhod_ok) {
        throw InvalidArgument(kModule, fmt::format("estimate needs the Skorokhod condition; residual {} > {}",
                                                   report.skorokhod_residual, report.tol));
    }
}

// E sup_k |field[k]|^p over the path set.
double sup_moment(const NodeField& field, const LatticePathSet& paths, const LpExponent& p) {
    const Table t = gather(field, paths, 0, static_cast<int>(field.size()) - 1);
    return std::pow(sp_norm(t, p, paths.weights), p.p());
}

// E (sum_k |f(t_k, x, 0, 0)| dt)^p.
double driver_moment(const ProblemSpec& spec, const Lattice& lattice, const LatticePathSet& paths,
                     const LpExponent& p) {
    const int n = lattice.n_steps();
    const double dt = lattice.grid().dt();
    NodeField f0 = make_node_field(n);
    for (int k = 0; k < n; ++k) {
        const double t = lattice.grid().time(k);
        for (int j = 0; j <= k; ++j) f0[k][j] = std::abs(spec.f(t, lattice.state(k, j), 0.0, 0.0)) * dt;
    }
    std::vector<double> per_path(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += f0[k][paths.nodes[i][k]];
        per_path[i] = std::pow(acc, p.p());
    }
    return path_mean(per_path, paths.weights);
}

NodeField obstacle_field(const ProblemSpec& spec, const Lattice& lattice) {
    const int n = lattice.n_steps();
    NodeField l = make_node_field(n);
    for (int k = 0; k <= n; ++k) {
        const double t = lattice.grid().time(k);
        for (int j = 0; j <= k; ++j) l[k][j] = spec.h(t, lattice.state(k, j));
    }
    return l;
}

double terminal_moment(const ProblemSpec& spec, const Lattice& lattice, const LpExponent& p) {
    const int n = lattice.n_steps();
    const auto prob = lattice.node_probabilities();
    double acc = 0.0;
    for (int j = 0; j <= n; ++j) acc += prob[n][j] * std::pow(std::abs(spec.g(lattice.state(n, j))), p.p());
    return acc;
}

EstimateReport make_report(std::string kind, const ProblemSpec& spec, double lhs, double rhs) {
    return {std::move(kind), spec.label, spec.p.p(), lhs, rhs, ratio_of(lhs, rhs)};
}

}  // namespace

double data_functional(const ProblemSpec& spec, const Lattice& lattice, const LatticePathSet& paths) {
    NodeField lplus = obstacle_field(spec, lattice);
    for (auto& row : lplus) {
        for (double& v : row) v = std::max(v, 0.0);
    }
    return terminal_moment(spec, lattice, spec.p) + driver_moment(spec, lattice, paths, spec.p) +
           sup_moment(lplus, paths, spec.p);
}

EstimateReport check_y_estimate(const SolutionTriple& sol, const ProblemSpec& spec, const Lattice& lattice,
                                const PathSetOptions& options) {
    require_grid(sol, lattice);
    require_skorokhod(sol, spec, lattice);
    const auto paths = lattice_paths(lattice, options);
    const double lhs = sup_moment(sol.y, paths, spec.p);
    return make_report("y", spec, lhs, data_functional(spec, lattice, paths));
}

EstimateReport check_z_estimate(const SolutionTriple& sol, const ProblemSpec& spec, const Lattice& lattice,
                                const PathSetOptions& options) {
    require_grid(sol, lattice);
    require_skorokhod(sol, spec, lattice);
    const auto paths = lattice_paths(lattice, options);
    const int n = lattice.n_steps();
    const double mz = mp_norm(gather(sol.z, paths, 0, n - 1), lattice.grid().dt(), spec.p, paths.weights);
    const double rhs = sup_moment(sol.y, paths, spec.p) + driver_moment(spec, lattice, paths, spec.p);
    return make_report("z", spec, std::pow(mz, spec.p.p()), rhs);
}

EstimateReport check_k_estimate(const SolutionTriple& sol, const ProblemSpec& spec, const Lattice& lattice,
                                const PathSetOptions& options) {
    require_grid(sol, lattice);
    require_skorokhod(sol, spec, lattice);
    const auto paths = lattice_paths(lattice, options);
    std::vector<double> kp(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        kp[i] = std::pow(std::abs(sol.k_along(paths.nodes[i]).back()), spec.p.p());
    }
    const double lhs = path_mean(kp, paths.weights);
    const double rhs = sup_moment(sol.y, paths, spec.p) + driver_moment(spec, lattice, paths, spec.p);
    return make_report("k", spec, lhs, rhs);
}

StabilityReport check_stability(const SolutionTriple& sol_a, const SolutionTriple& sol_b,
                                const ProblemSpec& spec_a, const ProblemSpec& spec_b, const Lattice& lattice,
                                const PathSetOptions& options) {
    require_grid(sol_a, lattice);
    require_grid(sol_b, lattice);
    const int n = lattice.n_steps();
    const double dt = lattice.grid().dt();
    const LpExponent& p = spec_a.p;
    const auto paths = lattice_paths(lattice, options);
    const auto prob = lattice.node_probabilities();

    StabilityReport r;
    NodeField dy = make_node_field(n);
    NodeField dl = make_node_field(n);
    NodeField df = make_node_field(n);
    double dxi_p = 0.0;
    bool same = true;
    for (int k = 0; k <= n; ++k) {
        const double t = lattice.grid().time(k);
        for (int j = 0; j <= k; ++j) {
            const double x = lattice.state(k, j);
            dy[k][j] = sol_a.y[k][j] - sol_b.y[k][j];
            dl[k][j] = spec_a.h(t, x) - spec_b.h(t, x);
            r.delta_y_max = std::max(r.delta_y_max, std::abs(dy[k][j]));
            if (k < n) {
                df[k][j] = std::abs(spec_a.f(t, x, sol_a.y[k][j], sol_a.z[k][j]) -
                                    spec_b.f(t, x, sol_a.y[k][j], sol_a.z[k][j])) * dt;
            } else {
                const double dxi = spec_a.g(x) - spec_b.g(x);
                dxi_p += prob[n][j] * std::pow(std::abs(dxi), p.p());
                same = same && dxi == 0.0;
            }
            same = same && dl[k][j] == 0.0 && df[k][j] == 0.0;
        }
    }
    std::vector<double> dfp(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += df[k][paths.nodes[i][k]];
        dfp[i] = std::pow(acc, p.p());
    }
    r.lhs = sup_moment(dy, paths, p);
    r.delta_y_norm = std::pow(r.lhs, 1.0 / p.p());
    r.delta_data = dxi_p + path_mean(dfp, paths.weights);
    r.delta_l = sup_moment(dl, paths, p);
    r.psi_T = data_functional(spec_a, lattice, paths) + data_functional(spec_b, lattice, paths);
    r.rhs = r.delta_data + std::pow(r.psi_T, 1.0 / p.p()) * std::pow(r.delta_l, (p.p() - 1.0) / p.p());
    r.ratio = ratio_of(r.lhs, r.rhs);
    r.identical_data = same;
    r.uniqueness_ok = !same || r.delta_y_max <= 1e-12;
    return r;
}

}  // namespace rbsde
