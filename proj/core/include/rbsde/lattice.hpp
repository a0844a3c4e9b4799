#ifndef RBSDE_LATTICE_HPP
#define RBSDE_LATTICE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "rbsde/table.hpp"

namespace rbsde {

/**
 * Uniform partition of [start, horizon] into n_steps intervals.
 *
 * Times are absolute: t_k = start + k * dt. A lattice started at (t, x)
 * for a Feynman-Kac probe uses start = t.
 */
class TimeGrid {
public:
    TimeGrid(int n_steps, double horizon, double start = 0.0);

    int n_steps() const noexcept { return n_steps_; }
    double horizon() const noexcept { return horizon_; }
    double start() const noexcept { return start_; }
    double dt() const noexcept { return dt_; }
    /// t_k; returns the horizon exactly for k == n_steps.
    double time(int k) const noexcept;

    bool operator==(const TimeGrid&) const = default;

private:
    int n_steps_;
    double horizon_;
    double start_;
    double dt_;
};

enum class ModelKind { arithmetic, geometric };

/**
 * One-dimensional forward diffusion dX = b(t,X) dt + sigma(t,X) dB.
 *
 * arithmetic: b = drift, sigma = vol (constants).
 * geometric:  b = drift * x, sigma = vol * x.
 */
struct ForwardModel {
    ModelKind kind = ModelKind::arithmetic;
    double drift = 0.0;
    double vol = 0.0;
    double x0 = 0.0;
    double t0 = 0.0;

    static ForwardModel arithmetic(double drift, double vol, double x0, double t0 = 0.0);
    static ForwardModel geometric(double mu, double sigma, double x0, double t0 = 0.0);

    double b(double t, double x) const noexcept;
    double sigma(double t, double x) const noexcept;

    /// Same coefficients, restarted from (t, x).
    ForwardModel started_at(double t, double x) const;

    /// Throws InvalidArgument when vol < 0 or a geometric model has x0 <= 0.
    void validate() const;
};

/**
 * Recombining binomial lattice: step k has k+1 nodes, node j moves to
 * j (down) or j+1 (up) with probability up_prob(k)[j] of going up.
 */
class Lattice {
public:
    Lattice(ForwardModel model, TimeGrid grid, std::vector<std::vector<double>> states,
            std::vector<std::vector<double>> up_prob);

    const TimeGrid& grid() const noexcept { return grid_; }
    const ForwardModel& model() const noexcept { return model_; }
    int n_steps() const noexcept { return grid_.n_steps(); }

    std::span<const double> states(int k) const { return states_.at(k); }
    /// Only defined for k < n_steps.
    std::span<const double> up_prob(int k) const { return up_prob_.at(k); }
    double state(int k, int j) const { return states_[k][j]; }

    /**
     * Conditional expectation one step back: out[j] = p*next[j+1] + (1-p)*next[j].
     * `next` holds the k+2 values at step k+1.
     */
    std::vector<double> expectation(int k, std::span<const double> next) const;

    /// Forward-induced probability of reaching each node from the root.
    std::vector<std::vector<double>> node_probabilities() const;

private:
    ForwardModel model_;
    TimeGrid grid_;
    std::vector<std::vector<double>> states_;
    std::vector<std::vector<double>> up_prob_;
};

/**
 * Arithmetic models get x_{k,j} = x0 + b*t + sigma*sqrt(dt)*(2j-k) with p = 1/2.
 * Geometric models use u = exp(sigma*sqrt(dt)), d = 1/u and
 * p = (exp(mu*dt) - d)/(u - d). Throws InvalidArgument if p leaves [0,1].
 */
Lattice build_lattice(const ForwardModel& model, const TimeGrid& grid);

/// Free-function form of Lattice::expectation.
std::vector<double> lattice_expectation(const Lattice& lattice, int k,
                                        std::span<const double> next);

/// Euler-Maruyama samples; states is n_paths x (n_steps+1), increments n_paths x n_steps.
struct PathBundle {
    TimeGrid grid;
    std::uint64_t seed = 0;
    Table states;
    Table brownian_increments;

    int n_paths() const noexcept { return static_cast<int>(states.rows()); }
};

/**
 * Path i draws its normals from std::mt19937_64 seeded with
 * splitmix64(seed + i), so the bundle does not depend on `threads`.
 */
PathBundle simulate_paths(const ForwardModel& model, const TimeGrid& grid, int n_paths,
                          std::uint64_t seed, int threads = 1);

/// SplitMix64 finalizer, used to derive independent per-path seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace rbsde

#endif  // RBSDE_LATTICE_HPP
