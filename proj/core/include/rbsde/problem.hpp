#ifndef RBSDE_PROBLEM_HPP
#define RBSDE_PROBLEM_HPP

#include <functional>
#include <string>
#include <string_view>

#include "rbsde/lattice.hpp"

namespace rbsde {

/// Integrability exponent p in (1,2) and its conjugate q = p/(p-1).
class LpExponent {
public:
    explicit LpExponent(double p = 1.5);

    double p() const noexcept { return p_; }
    double q() const noexcept { return p_ / (p_ - 1.0); }
    /// p(p-1)/2, the constant in front of the |Y|^{p-2}|Z|^2 term of the Ito expansion of |Y|^p.
    double c() const noexcept { return p_ * (p_ - 1.0) / 2.0; }

private:
    double p_;
};

using Generator = std::function<double(double t, double x, double y, double z)>;
using TerminalFn = std::function<double(double x)>;
using ObstacleFn = std::function<double(double t, double x)>;

/**
 * Data of a Markovian reflected BSDE: terminal value xi = g(X_T), driver
 * f(t, X_t, y, z), lower barrier L_t = h(t, X_t).
 *
 * kappa must bound the Lipschitz constant of f in (y, z). Growth of f, g, h
 * at infinity is assumed compatible with the exponent p (not checked).
 */
struct ProblemSpec {
    Generator generator;
    TerminalFn terminal;
    ObstacleFn obstacle;
    double kappa = 0.0;
    LpExponent p{1.5};
    std::string label;

    double f(double t, double x, double y, double z) const { return generator(t, x, y, z); }
    double g(double x) const { return terminal(x); }
    double h(double t, double x) const { return obstacle(t, x); }
};

/**
 * Named closed forms accepted by the configuration files:
 *   zero, constant:c, linear_discount:r (f = -r*y), put_payoff:K,
 *   call_payoff:K, identity (g(x) = x).
 * Throws InvalidArgument for unknown names or forms that make no sense in
 * the requested role (for example linear_discount as an obstacle).
 */
Generator make_generator(std::string_view form);
TerminalFn make_terminal(std::string_view form);
ObstacleFn make_obstacle(std::string_view form);
/// Lipschitz constant in (y, z) of a registry generator.
double generator_lipschitz(std::string_view form);

/// Builds a spec from registry forms; kappa < 0 means "infer from the generator".
ProblemSpec make_problem(std::string_view generator, std::string_view terminal,
                         std::string_view obstacle, double kappa = -1.0, double p = 1.5);

/// Terminal domination g(x) >= h(T, x) on every terminal lattice node.
/// Returns the largest violation (0 when the assumption holds).
double terminal_obstacle_violation(const ProblemSpec& spec, const Lattice& lattice);

/**
 * Samples (y, z) pairs around each of `samples` lattice nodes and returns
 * the largest observed difference quotient of f. A value above spec.kappa
 * falsifies the declared constant.
 */
double sampled_lipschitz(const ProblemSpec& spec, const Lattice& lattice, int samples,
                         std::uint64_t seed);

/// Throws InvalidArgument unless kappa * dt < 1 (the one-step implicit map contracts).
void require_contraction(const ProblemSpec& spec, const TimeGrid& grid, std::string_view module);

}  // namespace rbsde

#endif  // RBSDE_PROBLEM_HPP
