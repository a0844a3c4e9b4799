#ifndef RBSDE_IMPLICIT_STEP_HPP
#define RBSDE_IMPLICIT_STEP_HPP

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rbsde/error.hpp"
#include "rbsde/problem.hpp"

namespace rbsde::detail {

/// Fixed point of y = (base + dt*f(t,x,y,z)) / denom; contracts when kappa*dt < denom.
inline double implicit_fixed_point(const ProblemSpec& spec, double t, double x, double z, double base,
                                   double dt, double denom, double tol, int max_iter,
                                   const char* module) {
    double y = base / denom;
    for (int it = 0; it < max_iter; ++it) {
        const double next = (base + dt * spec.f(t, x, y, z)) / denom;
        if (!std::isfinite(next)) break;
        if (std::abs(next - y) <= tol * std::max(1.0, std::abs(next))) return next;
        y = next;
    }
    throw ConvergenceError(module,
                           fmt::format("one-step implicit solve did not converge in {} iterations at "
                                       "t={} x={} (needs kappa*dt < 1; kappa={}, dt={})",
                                       max_iter, t, x, spec.kappa, dt));
}

}  // namespace rbsde::detail

#endif  // RBSDE_IMPLICIT_STEP_HPP
