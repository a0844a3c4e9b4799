#ifndef RBSDE_NORMS_HPP
#define RBSDE_NORMS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/table.hpp"

namespace rbsde {

/**
 * (E sup_k |X_k|^p)^{1/p} over a [path][step] array.
 *
 * `weights` gives the probability of each path; empty means uniform.
 * Throws InvalidArgument on empty input or a weight count mismatch.
 */
double sp_norm(const Table& paths, const LpExponent& p, std::span<const double> weights = {});

/// (E (sum_k |Z_k|^2 dt)^{p/2})^{1/p}; every column of `z_paths` is one dt-interval.
double mp_norm(const Table& z_paths, double dt, const LpExponent& p,
               std::span<const double> weights = {});

/**
 * A set of lattice paths (node index j per step) with probability weights.
 *
 * Path functionals such as a running supremum are not node functions on a
 * recombining lattice, so their expectations are taken over this set:
 * every path enumerated with its exact probability when the lattice is
 * small, otherwise a fixed-seed sample with uniform weights.
 */
struct LatticePathSet {
    std::vector<std::vector<int>> nodes;
    std::vector<double> weights;
    bool exact = false;

    std::size_t size() const noexcept { return nodes.size(); }
};

struct PathSetOptions {
    int enumerate_up_to = 16;  ///< enumerate all 2^N paths when N <= this
    int samples = 8192;
    std::uint64_t seed = 20240607;
};

LatticePathSet lattice_paths(const Lattice& lattice, const PathSetOptions& options = {});

/// field values along each path, columns [first_step, last_step].
Table gather(const NodeField& field, const LatticePathSet& paths, int first_step, int last_step);

/// Weighted mean of per-path scalars.
double path_mean(std::span<const double> values, std::span<const double> weights);

/// Exact lattice expectation of a node function at step k.
double node_expectation(const std::vector<std::vector<double>>& node_prob, const NodeField& field,
                        int k);

}  // namespace rbsde

#endif  // RBSDE_NORMS_HPP
