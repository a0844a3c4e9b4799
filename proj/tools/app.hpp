#ifndef RBSDE_TOOLS_APP_HPP
#define RBSDE_TOOLS_APP_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbsde/lattice.hpp"
#include "rbsde/pde.hpp"

namespace rbsde::app {

/// Config parse or validation failure; what() carries "file:line: [section] key: reason".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { solve, penalize, pde, verify, convergence, crosscheck };

Command parse_command(const std::string& name);
std::string command_name(Command c);

struct PdeSettings {
    int m_nodes = 401;
    int steps = 400;
    std::optional<double> x_min;
    std::optional<double> x_max;
    BoundaryMode boundary = BoundaryMode::dirichlet_obstacle;
    PdeMethod method = PdeMethod::projected;
    double penalty = 1e4;
    PsorOptions psor;
};

struct ExperimentConfig {
    Command command = Command::solve;
    std::uint64_t seed = 20240607;
    std::filesystem::path out = "rbsde_out";
    double tol = 1e-10;
    bool quiet = false;
    int threads = 1;

    ForwardModel model = ForwardModel::arithmetic(0.0, 1.0, 0.0);
    double horizon = 1.0;
    int steps = 64;

    std::string generator = "zero";
    std::string terminal = "zero";
    std::string obstacle = "constant:-1e9";
    double kappa = -1.0;  ///< negative: use the generator's Lipschitz constant
    double p = 1.5;

    std::vector<double> schedule;  ///< empty: 2^0..2^10
    double penalty_n = 1024.0;
    double tail_tol_rel = 1e-3;
    double ratio_min = 1.5;
    double ratio_max = 2.5;

    PdeSettings pde;

    double snell_penalty_tol = 1e-2;  ///< relative to max(1, |Y_snell|)
    double snell_pde_tol = 1e-2;
    double penalty_pde_tol = 1e-2;

    std::optional<std::filesystem::path> baseline;  ///< estimates baseline for verify
    double baseline_slack = 0.01;
};

/// Reads an INI-style config. Throws ConfigError with line and field context.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>");

/**
 * Runs one experiment, writing data files under config.out and a key=value
 * summary to `out`. Returns 0 when every invariant holds and 1 otherwise.
 * Solver errors propagate as rbsde::Error.
 */
int run(const ExperimentConfig& config, std::ostream& out);

}  // namespace rbsde::app

#endif  // RBSDE_TOOLS_APP_HPP
