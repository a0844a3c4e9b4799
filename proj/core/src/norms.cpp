#include "rbsde/norms.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "rbsde/error.hpp"

namespace rbsde {

namespace {

constexpr const char* kModule = "problem_core";

void check_weights(const Table& t, std::span<const double> weights) {
    if (t.rows() == 0 || t.cols() == 0) throw InvalidArgument(kModule, "norm of an empty path array");
    if (!weights.empty() && weights.size() != t.rows()) {
        throw InvalidArgument(kModule, fmt::format("{} weights for {} paths", weights.size(), t.rows()));
    }
}

double weighted_mean(std::span<const double> values, std::span<const double> weights) {
    double acc = 0.0;
    if (weights.empty()) {
        for (double v : values) acc += v;
        return acc / static_cast<double>(values.size());
    }
    for (std::size_t i = 0; i < values.size(); ++i) acc += weights[i] * values[i];
    return acc;
}

}  // namespace

double sp_norm(const Table& paths, const LpExponent& p, std::span<const double> weights) {
    check_weights(paths, weights);
    std::vector<double> per_path(paths.rows());
    for (std::size_t i = 0; i < paths.rows(); ++i) {
        double sup = 0.0;
        for (double v : paths.row(i)) sup = std::max(sup, std::abs(v));
        per_path[i] = std::pow(sup, p.p());
    }
    return std::pow(weighted_mean(per_path, weights), 1.0 / p.p());
}

double mp_norm(const Table& z_paths, double dt, const LpExponent& p, std::span<const double> weights) {
    check_weights(z_paths, weights);
    if (!(dt > 0.0)) throw InvalidArgument(kModule, fmt::format("dt must be > 0, got {}", dt));
    std::vector<double> per_path(z_paths.rows());
    for (std::size_t i = 0; i < z_paths.rows(); ++i) {
        double quad = 0.0;
        for (double z : z_paths.row(i)) quad += z * z * dt;
        per_path[i] = std::pow(quad, p.p() / 2.0);
    }
    return std::pow(weighted_mean(per_path, weights), 1.0 / p.p());
}

LatticePathSet lattice_paths(const Lattice& lattice, const PathSetOptions& options) {
    const int n = lattice.n_steps();
    LatticePathSet set;
    if (n <= options.enumerate_up_to) {
        set.exact = true;
        const std::size_t count = std::size_t{1} << n;
        set.nodes.reserve(count);
        set.weights.reserve(count);
        for (std::size_t bits = 0; bits < count; ++bits) {
            std::vector<int> path(n + 1, 0);
            double w = 1.0;
            for (int k = 0; k < n; ++k) {
                const bool up = (bits >> k) & 1U;
                const double p = lattice.up_prob(k)[path[k]];
                w *= up ? p : 1.0 - p;
                path[k + 1] = path[k] + (up ? 1 : 0);
            }
            set.nodes.push_back(std::move(path));
            set.weights.push_back(w);
        }
        return set;
    }
    std::mt19937_64 rng(splitmix64(options.seed));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    set.nodes.reserve(options.samples);
    for (int s = 0; s < options.samples; ++s) {
        std::vector<int> path(n + 1, 0);
        for (int k = 0; k < n; ++k) {
            path[k + 1] = path[k] + (uniform(rng) < lattice.up_prob(k)[path[k]] ? 1 : 0);
        }
        set.nodes.push_back(std::move(path));
    }
    set.weights.assign(set.nodes.size(), 1.0 / static_cast<double>(set.nodes.size()));
    return set;
}

Table gather(const NodeField& field, const LatticePathSet& paths, int first_step, int last_step) {
    if (first_step < 0 || last_step < first_step || last_step >= static_cast<int>(field.size())) {
        throw InvalidArgument(kModule, fmt::format("bad step range [{}, {}]", first_step, last_step));
    }
    Table out(paths.size(), static_cast<std::size_t>(last_step - first_step + 1));
    for (std::size_t i = 0; i < paths.size(); ++i) {
        for (int k = first_step; k <= last_step; ++k) out(i, k - first_step) = field[k][paths.nodes[i][k]];
    }
    return out;
}

double path_mean(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) {
        throw InvalidArgument(kModule, "path_mean: value/weight count mismatch");
    }
    return weighted_mean(values, weights);
}

double node_expectation(const std::vector<std::vector<double>>& node_prob, const NodeField& field,
                        int k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < field.at(k).size(); ++j) acc += node_prob.at(k)[j] * field[k][j];
    return acc;
}

}  // namespace rbsde
