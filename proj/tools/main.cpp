#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "app.hpp"
#include "rbsde/error.hpp"

int main(int argc, char** argv) {
    CLI::App cli{"Reflected BSDE lab: lattice, penalization and obstacle-PDE experiments"};
    std::string config_path;
    std::string command;
    std::uint64_t seed = 0;
    std::string out_dir;
    double tol = 0.0;
    bool quiet = false;
    cli.add_option("command", command, "solve | penalize | pde | verify | convergence | crosscheck (overrides config)");
    cli.add_option("--config", config_path, "INI experiment file")->required()->check(CLI::ExistingFile);
    auto* seed_opt = cli.add_option("--seed", seed, "seed for sampled lattice path sets");
    auto* out_opt = cli.add_option("--out", out_dir, "output directory");
    auto* tol_opt = cli.add_option("--tol", tol, "validation tolerance")->check(CLI::PositiveNumber);
    cli.add_flag("--quiet", quiet, "suppress the summary on stdout");
    CLI11_PARSE(cli, argc, argv);

    try {
        auto cfg = rbsde::app::load_config(config_path);
        if (!command.empty()) cfg.command = rbsde::app::parse_command(command);
        if (*seed_opt) cfg.seed = seed;
        if (*out_opt) cfg.out = out_dir;
        if (*tol_opt) cfg.tol = tol;
        cfg.quiet = quiet;
        return rbsde::app::run(cfg, std::cout);
    } catch (const rbsde::app::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const rbsde::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}
