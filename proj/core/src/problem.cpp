#include "rbsde/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include <fmt/format.h>

#include "rbsde/error.hpp"

namespace rbsde {

namespace {

constexpr const char* kModule = "problem_core";

struct ParsedForm {
    std::string name;
    double param = 0.0;
    bool has_param = false;
};

ParsedForm parse_form(std::string_view form) {
    ParsedForm out;
    const auto colon = form.find(':');
    out.name = std::string(form.substr(0, colon));
    if (colon == std::string_view::npos) return out;
    const auto text = form.substr(colon + 1);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw InvalidArgument(kModule, fmt::format("bad numeric parameter in form '{}'", form));
    }
    out.param = value;
    out.has_param = true;
    return out;
}

void expect_param(const ParsedForm& f, bool wanted, std::string_view form) {
    if (f.has_param != wanted) {
        throw InvalidArgument(kModule, wanted
                                           ? fmt::format("form '{}' needs a parameter ('{}:value')", form, f.name)
                                           : fmt::format("form '{}' takes no parameter", form));
    }
}

[[noreturn]] void unknown(std::string_view form, std::string_view role) {
    throw InvalidArgument(kModule, fmt::format("unknown {} form '{}'", role, form));
}

}  // namespace

LpExponent::LpExponent(double p) : p_(p) {
    if (!(p > 1.0 && p < 2.0)) {
        throw InvalidArgument(kModule, fmt::format("p must lie in (1,2), got {}", p));
    }
}

Generator make_generator(std::string_view form) {
    const auto f = parse_form(form);
    if (f.name == "zero") {
        expect_param(f, false, form);
        return [](double, double, double, double) { return 0.0; };
    }
    if (f.name == "constant") {
        expect_param(f, true, form);
        return [c = f.param](double, double, double, double) { return c; };
    }
    if (f.name == "linear_discount") {
        expect_param(f, true, form);
        return [r = f.param](double, double, double y, double) { return -r * y; };
    }
    unknown(form, "generator");
}

double generator_lipschitz(std::string_view form) {
    const auto f = parse_form(form);
    if (f.name == "linear_discount") return std::abs(f.param);
    if (f.name == "zero" || f.name == "constant") return 0.0;
    unknown(form, "generator");
}

TerminalFn make_terminal(std::string_view form) {
    const auto f = parse_form(form);
    if (f.name == "zero") {
        expect_param(f, false, form);
        return [](double) { return 0.0; };
    }
    if (f.name == "constant") {
        expect_param(f, true, form);
        return [c = f.param](double) { return c; };
    }
    if (f.name == "put_payoff") {
        expect_param(f, true, form);
        return [k = f.param](double x) { return std::max(k - x, 0.0); };
    }
    if (f.name == "call_payoff") {
        expect_param(f, true, form);
        return [k = f.param](double x) { return std::max(x - k, 0.0); };
    }
    if (f.name == "identity") {
        expect_param(f, false, form);
        return [](double x) { return x; };
    }
    unknown(form, "terminal");
}

ObstacleFn make_obstacle(std::string_view form) {
    auto g = make_terminal(form);
    return [g = std::move(g)](double, double x) { return g(x); };
}

ProblemSpec make_problem(std::string_view generator, std::string_view terminal,
                         std::string_view obstacle, double kappa, double p) {
    const double lip = generator_lipschitz(generator);
    if (kappa >= 0.0 && kappa < lip) {
        throw InvalidArgument(kModule, fmt::format("kappa={} is below the Lipschitz constant {} of '{}'",
                                                   kappa, lip, generator));
    }
    ProblemSpec spec{make_generator(generator), make_terminal(terminal), make_obstacle(obstacle),
                     kappa >= 0.0 ? kappa : lip, LpExponent(p),
                     fmt::format("f={} g={} h={}", generator, terminal, obstacle)};
    return spec;
}

double terminal_obstacle_violation(const ProblemSpec& spec, const Lattice& lattice) {
    const int n = lattice.n_steps();
    const double t = lattice.grid().time(n);
    double worst = 0.0;
    for (double x : lattice.states(n)) worst = std::max(worst, spec.h(t, x) - spec.g(x));
    return worst;
}

double sampled_lipschitz(const ProblemSpec& spec, const Lattice& lattice, int samples,
                         std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed));
    const int n = lattice.n_steps();
    std::uniform_int_distribution<int> step(0, n);
    std::normal_distribution<double> normal(0.0, 10.0);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const int k = step(rng);
        const int j = std::uniform_int_distribution<int>(0, k)(rng);
        const double t = lattice.grid().time(k);
        const double x = lattice.state(k, j);
        const double y1 = normal(rng), y2 = normal(rng), z1 = normal(rng), z2 = normal(rng);
        const double dist = std::abs(y1 - y2) + std::abs(z1 - z2);
        if (dist == 0.0) continue;
        worst = std::max(worst, std::abs(spec.f(t, x, y1, z1) - spec.f(t, x, y2, z2)) / dist);
    }
    return worst;
}

void require_contraction(const ProblemSpec& spec, const TimeGrid& grid, std::string_view module) {
    if (!(spec.kappa * grid.dt() < 1.0)) {
        throw InvalidArgument(std::string(module),
                              fmt::format("implicit step needs kappa*dt < 1, got kappa={} dt={} "
                                          "(kappa*dt={})",
                                          spec.kappa, grid.dt(), spec.kappa * grid.dt()));
    }
}

}  // namespace rbsde
