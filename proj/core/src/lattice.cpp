#include "rbsde/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "rbsde/error.hpp"

namespace rbsde {

TimeGrid::TimeGrid(int n_steps, double horizon, double start)
    : n_steps_(n_steps), horizon_(horizon), start_(start), dt_(0.0) {
    if (n_steps < 1) {
        throw InvalidArgument("lattice_engine", fmt::format("n_steps must be >= 1, got {}", n_steps));
    }
    if (!(horizon > start) || !std::isfinite(horizon) || !std::isfinite(start)) {
        throw InvalidArgument("lattice_engine",
                              fmt::format("horizon {} must exceed start time {}", horizon, start));
    }
    dt_ = (horizon - start) / n_steps;
}

double TimeGrid::time(int k) const noexcept {
    if (k >= n_steps_) return horizon_;
    return start_ + k * dt_;
}

ForwardModel ForwardModel::arithmetic(double drift, double vol, double x0, double t0) {
    ForwardModel m{ModelKind::arithmetic, drift, vol, x0, t0};
    m.validate();
    return m;
}

ForwardModel ForwardModel::geometric(double mu, double sigma, double x0, double t0) {
    ForwardModel m{ModelKind::geometric, mu, sigma, x0, t0};
    m.validate();
    return m;
}

double ForwardModel::b(double /*t*/, double x) const noexcept {
    return kind == ModelKind::arithmetic ? drift : drift * x;
}

double ForwardModel::sigma(double /*t*/, double x) const noexcept {
    return kind == ModelKind::arithmetic ? vol : vol * x;
}

ForwardModel ForwardModel::started_at(double t, double x) const {
    ForwardModel m = *this;
    m.t0 = t;
    m.x0 = x;
    m.validate();
    return m;
}

void ForwardModel::validate() const {
    if (!(vol >= 0.0)) {
        throw InvalidArgument("lattice_engine", fmt::format("volatility must be >= 0, got {}", vol));
    }
    if (kind == ModelKind::geometric && !(x0 > 0.0)) {
        throw InvalidArgument("lattice_engine",
                              fmt::format("geometric model needs x0 > 0, got {}", x0));
    }
}

Lattice::Lattice(ForwardModel model, TimeGrid grid, std::vector<std::vector<double>> states,
                 std::vector<std::vector<double>> up_prob)
    : model_(model), grid_(grid), states_(std::move(states)), up_prob_(std::move(up_prob)) {
    const int n = grid_.n_steps();
    if (static_cast<int>(states_.size()) != n + 1 || static_cast<int>(up_prob_.size()) != n) {
        throw InvalidArgument("lattice_engine", "lattice arrays do not match the time grid");
    }
    for (int k = 0; k <= n; ++k) {
        if (static_cast<int>(states_[k].size()) != k + 1) {
            throw InvalidArgument("lattice_engine", fmt::format("step {} must have {} nodes", k, k + 1));
        }
        if (k < n && static_cast<int>(up_prob_[k].size()) != k + 1) {
            throw InvalidArgument("lattice_engine",
                                  fmt::format("step {} must have {} probabilities", k, k + 1));
        }
    }
}

std::vector<double> Lattice::expectation(int k, std::span<const double> next) const {
    if (k < 0 || k >= n_steps()) {
        throw InvalidArgument("lattice_engine", fmt::format("no transition out of step {}", k));
    }
    if (static_cast<int>(next.size()) != k + 2) {
        throw InvalidArgument("lattice_engine",
                              fmt::format("expectation at step {} needs {} values, got {}", k, k + 2,
                                          next.size()));
    }
    const auto& p = up_prob_[k];
    std::vector<double> out(static_cast<std::size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) out[j] = p[j] * next[j + 1] + (1.0 - p[j]) * next[j];
    return out;
}

std::vector<std::vector<double>> Lattice::node_probabilities() const {
    const int n = n_steps();
    auto prob = make_node_field(n);
    prob[0][0] = 1.0;
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j <= k; ++j) {
            const double p = up_prob_[k][j];
            prob[k + 1][j] += (1.0 - p) * prob[k][j];
            prob[k + 1][j + 1] += p * prob[k][j];
        }
    }
    return prob;
}

Lattice build_lattice(const ForwardModel& model, const TimeGrid& grid) {
    model.validate();
    const int n = grid.n_steps();
    const double dt = grid.dt();
    const double sqdt = std::sqrt(dt);
    std::vector<std::vector<double>> states(n + 1);
    std::vector<std::vector<double>> probs(n);

    if (model.kind == ModelKind::arithmetic) {
        for (int k = 0; k <= n; ++k) {
            states[k].resize(k + 1);
            const double centre = model.x0 + model.drift * (grid.time(k) - grid.start());
            for (int j = 0; j <= k; ++j) states[k][j] = centre + model.vol * sqdt * (2 * j - k);
            if (k < n) probs[k].assign(k + 1, 0.5);
        }
        return Lattice(model, grid, std::move(states), std::move(probs));
    }

    // Geometric: CRR factors around x0. A zero volatility collapses each
    // step to the deterministic growth x0*exp(mu*t).
    double p = 0.5;
    if (model.vol > 0.0) {
        const double u = std::exp(model.vol * sqdt);
        const double d = 1.0 / u;
        p = (std::exp(model.drift * dt) - d) / (u - d);
        if (!(p >= 0.0 && p <= 1.0)) {
            throw InvalidArgument(
                "lattice_engine",
                fmt::format("dt too coarse for this drift/volatility: up probability {} at step 0 "
                            "(dt={}, mu={}, sigma={})",
                            p, dt, model.drift, model.vol));
        }
    }
    for (int k = 0; k <= n; ++k) {
        states[k].resize(k + 1);
        for (int j = 0; j <= k; ++j) {
            if (model.vol > 0.0) {
                states[k][j] = model.x0 * std::exp(model.vol * sqdt * (2 * j - k));
            } else {
                states[k][j] = model.x0 * std::exp(model.drift * (grid.time(k) - grid.start()));
            }
        }
        if (k < n) probs[k].assign(k + 1, p);
    }
    return Lattice(model, grid, std::move(states), std::move(probs));
}

std::vector<double> lattice_expectation(const Lattice& lattice, int k, std::span<const double> next) {
    return lattice.expectation(k, next);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

PathBundle simulate_paths(const ForwardModel& model, const TimeGrid& grid, int n_paths,
                          std::uint64_t seed, int threads) {
    model.validate();
    if (n_paths < 1) {
        throw InvalidArgument("lattice_engine", fmt::format("n_paths must be >= 1, got {}", n_paths));
    }
    const int n = grid.n_steps();
    const double dt = grid.dt();
    const double sqdt = std::sqrt(dt);
    PathBundle bundle{grid, seed, Table(n_paths, n + 1), Table(n_paths, n)};

    auto simulate_range = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            std::mt19937_64 rng(splitmix64(seed + static_cast<std::uint64_t>(i)));
            std::normal_distribution<double> normal(0.0, 1.0);
            auto x = bundle.states.row(i);
            auto dw = bundle.brownian_increments.row(i);
            x[0] = model.x0;
            for (int k = 0; k < n; ++k) {
                const double t = grid.time(k);
                dw[k] = sqdt * normal(rng);
                x[k + 1] = x[k] + model.b(t, x[k]) * dt + model.sigma(t, x[k]) * dw[k];
            }
        }
    };

    threads = std::max(1, std::min(threads, n_paths));
    if (threads == 1) {
        simulate_range(0, n_paths);
        return bundle;
    }
    {
        std::vector<std::jthread> pool;
        const int chunk = (n_paths + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(n_paths, begin + chunk);
            if (begin < end) pool.emplace_back(simulate_range, begin, end);
        }
    }
    return bundle;
}

}  // namespace rbsde
