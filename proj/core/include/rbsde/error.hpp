#ifndef RBSDE_ERROR_HPP
#define RBSDE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rbsde {

/// Base class for every error raised by the library. The module name is
/// prefixed to the message so CLI diagnostics carry their origin.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Inputs violate a documented precondition (bad shapes, out-of-range parameters).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An iterative solve did not reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace rbsde

#endif  // RBSDE_ERROR_HPP
