#include "app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rbsde/error.hpp"
#include "rbsde/estimates.hpp"
#include "rbsde/io.hpp"
#include "rbsde/penalty.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/snell.hpp"
#include "rbsde/solution.hpp"

namespace rbsde::app {

namespace pt = boost::property_tree;

Command parse_command(const std::string& name) {
    if (name == "solve") return Command::solve;
    if (name == "penalize") return Command::penalize;
    if (name == "pde") return Command::pde;
    if (name == "verify") return Command::verify;
    if (name == "convergence") return Command::convergence;
    if (name == "crosscheck") return Command::crosscheck;
    throw ConfigError(fmt::format(
        "unknown command '{}' (expected solve, penalize, pde, verify, convergence or crosscheck)", name));
}

std::string command_name(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::penalize: return "penalize";
        case Command::pde: return "pde";
        case Command::verify: return "verify";
        case Command::convergence: return "convergence";
        case Command::crosscheck: return "crosscheck";
    }
    return "?";
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Wraps a parsed property tree and remembers which keys were read, so unknown
// keys and bad values can be reported with their line.
class Reader {
public:
    Reader(const std::string& text, std::string source) : source_(std::move(source)) {
        std::istringstream lines(text);
        for (std::string line; std::getline(lines, line);) lines_.push_back(line);
        std::istringstream is(text);
        try {
            pt::read_ini(is, tree_);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError(fmt::format("{}:{}: {}", source_, e.line(), e.message()));
        }
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) {
        used_.insert(section + "." + key);
        const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& why) const {
        const int line = line_of(section, key);
        if (line > 0) throw ConfigError(fmt::format("{}:{}: [{}] {}: {}", source_, line, section, key, why));
        throw ConfigError(fmt::format("{}: [{}] {}: {}", source_, section, key, why));
    }

    double real(const std::string& section, const std::string& key, double fallback) {
        const auto v = get(section, key);
        if (!v) return fallback;
        try {
            const double x = parse_real(*v);
            if (!std::isfinite(x)) fail(section, key, fmt::format("'{}' is not finite", *v));
            return x;
        } catch (const rbsde::Error&) {
            fail(section, key, fmt::format("'{}' is not a number", *v));
        }
    }

    long long integer(const std::string& section, const std::string& key, long long fallback) {
        const auto v = get(section, key);
        if (!v) return fallback;
        long long x = 0;
        const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
        if (ec != std::errc() || ptr != v->data() + v->size() || v->empty()) {
            fail(section, key, fmt::format("'{}' is not an integer", *v));
        }
        return x;
    }

    std::uint64_t unsigned64(const std::string& section, const std::string& key, std::uint64_t fallback) {
        const auto v = get(section, key);
        if (!v) return fallback;
        std::uint64_t x = 0;
        const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
        if (ec != std::errc() || ptr != v->data() + v->size() || v->empty()) {
            fail(section, key, fmt::format("'{}' is not an unsigned 64-bit integer", *v));
        }
        return x;
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) {
        return get(section, key).value_or(fallback);
    }

    // Every key present in the file must have been read.
    void reject_unknown() const {
        for (const auto& [section, body] : tree_) {
            if (body.empty() && !body.data().empty()) {
                fail("", section, "key outside any section");
            }
            for (const auto& [key, value] : body) {
                (void)value;
                if (!used_.count(section + "." + key)) fail(section, key, "unknown key");
            }
        }
    }

private:
    int line_of(const std::string& section, const std::string& key) const {
        std::string current;
        for (std::size_t i = 0; i < lines_.size(); ++i) {
            const std::string l = trim(lines_[i]);
            if (l.empty() || l[0] == ';' || l[0] == '#') continue;
            if (l.front() == '[' && l.back() == ']') {
                current = trim(l.substr(1, l.size() - 2));
                continue;
            }
            const auto eq = l.find('=');
            if (eq != std::string::npos && current == section && trim(l.substr(0, eq)) == key) {
                return static_cast<int>(i + 1);
            }
        }
        return 0;
    }

    std::string source_;
    std::vector<std::string> lines_;
    pt::ptree tree_;
    std::set<std::string> used_;
};

template <class F>
void check_field(Reader& r, const std::string& section, const std::string& key, F&& probe) {
    try {
        probe();
    } catch (const rbsde::Error& e) {
        r.fail(section, key, e.what());
    }
}

std::vector<double> parse_schedule(Reader& r, const std::string& text) {
    std::vector<double> out;
    std::istringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');) {
        cell = trim(cell);
        try {
            out.push_back(parse_real(cell));
        } catch (const rbsde::Error&) {
            r.fail("penalty", "schedule", fmt::format("'{}' is not a number", cell));
        }
    }
    if (out.empty()) r.fail("penalty", "schedule", "empty schedule");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] > 0.0)) r.fail("penalty", "schedule", "entries must be positive");
        if (i > 0 && !(out[i] > out[i - 1])) r.fail("penalty", "schedule", "entries must be strictly increasing");
    }
    return out;
}

void require_positive(Reader& r, const std::string& section, const std::string& key, double v) {
    if (!(v > 0.0)) r.fail(section, key, fmt::format("must be positive, got {}", format_real(v)));
}

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
    const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    Reader r(text, source);
    ExperimentConfig c;

    if (const auto cmd = r.get("experiment", "command")) {
        try {
            c.command = parse_command(*cmd);
        } catch (const ConfigError& e) {
            r.fail("experiment", "command", e.what());
        }
    }
    c.seed = r.unsigned64("experiment", "seed", c.seed);
    c.out = r.text("experiment", "out", c.out.string());
    c.tol = r.real("experiment", "tol", c.tol);
    require_positive(r, "experiment", "tol", c.tol);
    const auto threads = r.integer("experiment", "threads", c.threads);
    if (threads < 1 || threads > 256) r.fail("experiment", "threads", "must lie in [1, 256]");
    c.threads = static_cast<int>(threads);

    const std::string kind = r.text("model", "kind", "arithmetic");
    const double drift = r.real("model", "drift", 0.0);
    const double vol = r.real("model", "vol", 1.0);
    const double x0 = r.real("model", "x0", kind == "geometric" ? 1.0 : 0.0);
    if (kind != "arithmetic" && kind != "geometric") {
        r.fail("model", "kind", fmt::format("'{}' is neither arithmetic nor geometric", kind));
    }
    if (vol < 0.0) r.fail("model", "vol", "must be nonnegative");
    if (kind == "geometric" && !(x0 > 0.0)) r.fail("model", "x0", "geometric models need x0 > 0");
    check_field(r, "model", "kind", [&] {
        c.model = kind == "arithmetic" ? ForwardModel::arithmetic(drift, vol, x0) : ForwardModel::geometric(drift, vol, x0);
    });

    c.horizon = r.real("grid", "horizon", c.horizon);
    require_positive(r, "grid", "horizon", c.horizon);
    const auto steps = r.integer("grid", "steps", c.steps);
    if (steps < 1 || steps > 100000) r.fail("grid", "steps", "must lie in [1, 100000]");
    c.steps = static_cast<int>(steps);

    c.generator = r.text("problem", "generator", c.generator);
    c.terminal = r.text("problem", "terminal", c.terminal);
    c.obstacle = r.text("problem", "obstacle", c.obstacle);
    c.kappa = r.real("problem", "kappa", c.kappa);
    c.p = r.real("problem", "p", c.p);
    check_field(r, "problem", "generator", [&] { (void)make_generator(c.generator); });
    check_field(r, "problem", "terminal", [&] { (void)make_terminal(c.terminal); });
    check_field(r, "problem", "obstacle", [&] { (void)make_obstacle(c.obstacle); });
    check_field(r, "problem", "p", [&] { (void)LpExponent(c.p); });
    check_field(r, "problem", "kappa", [&] { (void)make_problem(c.generator, c.terminal, c.obstacle, c.kappa, c.p); });

    if (const auto s = r.get("penalty", "schedule"); s && *s != "default") c.schedule = parse_schedule(r, *s);
    c.penalty_n = r.real("penalty", "n", c.penalty_n);
    require_positive(r, "penalty", "n", c.penalty_n);
    c.tail_tol_rel = r.real("penalty", "tail_tol_rel", c.tail_tol_rel);
    require_positive(r, "penalty", "tail_tol_rel", c.tail_tol_rel);
    c.ratio_min = r.real("penalty", "ratio_min", c.ratio_min);
    c.ratio_max = r.real("penalty", "ratio_max", c.ratio_max);
    if (!(c.ratio_min > 0.0 && c.ratio_min < c.ratio_max)) {
        r.fail("penalty", "ratio_max", "need 0 < ratio_min < ratio_max");
    }

    const auto m = r.integer("pde", "m_nodes", c.pde.m_nodes);
    if (m < 3 || m > 1000000) r.fail("pde", "m_nodes", "must lie in [3, 1000000]");
    c.pde.m_nodes = static_cast<int>(m);
    const auto pde_steps = r.integer("pde", "steps", c.pde.steps);
    if (pde_steps < 1 || pde_steps > 100000) r.fail("pde", "steps", "must lie in [1, 100000]");
    c.pde.steps = static_cast<int>(pde_steps);
    if (r.get("pde", "x_min")) c.pde.x_min = r.real("pde", "x_min", 0.0);
    if (r.get("pde", "x_max")) c.pde.x_max = r.real("pde", "x_max", 0.0);
    if (c.pde.x_min.has_value() != c.pde.x_max.has_value()) {
        r.fail("pde", c.pde.x_min ? "x_max" : "x_min", "x_min and x_max must be given together");
    }
    if (c.pde.x_min && !(*c.pde.x_min < *c.pde.x_max)) r.fail("pde", "x_max", "must exceed x_min");
    const std::string boundary = r.text("pde", "boundary", "dirichlet_obstacle");
    if (boundary == "dirichlet_obstacle") {
        c.pde.boundary = BoundaryMode::dirichlet_obstacle;
    } else if (boundary == "dirichlet_terminal_extrapolation") {
        c.pde.boundary = BoundaryMode::dirichlet_terminal_extrapolation;
    } else {
        r.fail("pde", "boundary", fmt::format("unknown boundary mode '{}'", boundary));
    }
    const std::string method = r.text("pde", "method", "projected");
    if (method == "projected") {
        c.pde.method = PdeMethod::projected;
    } else if (method == "penalized") {
        c.pde.method = PdeMethod::penalized;
    } else {
        r.fail("pde", "method", fmt::format("unknown method '{}'", method));
    }
    c.pde.penalty = r.real("pde", "penalty", c.pde.penalty);
    require_positive(r, "pde", "penalty", c.pde.penalty);
    c.pde.psor.omega = r.real("pde", "omega", c.pde.psor.omega);
    if (!(c.pde.psor.omega > 0.0 && c.pde.psor.omega < 2.0)) r.fail("pde", "omega", "must lie in (0, 2)");
    c.pde.psor.tol = r.real("pde", "tol", c.pde.psor.tol);
    require_positive(r, "pde", "tol", c.pde.psor.tol);
    const auto iters = r.integer("pde", "max_iterations", c.pde.psor.max_iterations);
    if (iters < 1 || iters > 100000000) r.fail("pde", "max_iterations", "must lie in [1, 1e8]");
    c.pde.psor.max_iterations = static_cast<int>(iters);

    c.snell_penalty_tol = r.real("crosscheck", "snell_penalty", c.snell_penalty_tol);
    require_positive(r, "crosscheck", "snell_penalty", c.snell_penalty_tol);
    c.snell_pde_tol = r.real("crosscheck", "snell_pde", c.snell_pde_tol);
    require_positive(r, "crosscheck", "snell_pde", c.snell_pde_tol);
    c.penalty_pde_tol = r.real("crosscheck", "penalty_pde", c.penalty_pde_tol);
    require_positive(r, "crosscheck", "penalty_pde", c.penalty_pde_tol);

    if (const auto b = r.get("verify", "baseline")) c.baseline = std::filesystem::path(*b);
    c.baseline_slack = r.real("verify", "baseline_slack", c.baseline_slack);
    if (!(c.baseline_slack >= 0.0)) r.fail("verify", "baseline_slack", "must be nonnegative");

    r.reject_unknown();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    auto c = parse_config(is, path.string());
    // Relative baseline paths are resolved against the config's directory.
    if (c.baseline && c.baseline->is_relative()) c.baseline = path.parent_path() / *c.baseline;
    return c;
}

namespace {

class Summary {
public:
    Summary(std::ostream& os, bool quiet) : os_(os), quiet_(quiet) {}

    void put(const std::string& key, const std::string& value) {
        const std::string line = key + "=" + value + "\n";
        text_ += line;
        if (!quiet_) os_ << line;
    }
    void put(const std::string& key, double value) { put(key, format_real(value)); }
    void flag(const std::string& key, bool ok) { put(key, ok ? "pass" : "FAIL"); }

    const std::string& text() const { return text_; }

private:
    std::ostream& os_;
    bool quiet_;
    std::string text_;
};

struct Context {
    const ExperimentConfig& cfg;
    ProblemSpec spec;
    Lattice lattice;
    PathSetOptions paths;
    ValidationOptions validation;
};

template <class W>
void write_csv(const std::filesystem::path& path, W&& writer) {
    std::ostringstream os;
    writer(os);
    write_text_file(path, os.str());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

double scale_of(double v) { return std::max(1.0, std::abs(v)); }

bool run_solve(Context& ctx, Summary& s) {
    const auto sn = solve_snell(ctx.lattice, ctx.spec);
    const auto rep = validate_solution(sn.triple, ctx.spec, ctx.lattice, ctx.validation);
    write_csv(ctx.cfg.out / "snell.csv", [&](std::ostream& os) { write_snell_csv(os, sn, ctx.lattice); });
    write_json(ctx.cfg.out / "validation.json", to_json(rep));
    s.put("Y0", sn.triple.y0());
    s.put("Z0", sn.triple.z[0][0]);
    s.put("obstacle_violation", rep.obstacle_violation);
    s.put("skorokhod_residual", rep.skorokhod_residual);
    s.put("backward_residual", rep.backward_residual);
    s.flag("validation", rep.all_pass());
    return rep.all_pass();
}

bool run_penalize(Context& ctx, Summary& s) {
    const auto sol = solve_penalized(ctx.lattice, ctx.spec, ctx.cfg.penalty_n);
    const auto sn = solve_snell(ctx.lattice, ctx.spec);
    auto opts = ctx.validation;
    opts.check_skorokhod = false;
    const auto rep = validate_solution(sol, ctx.spec, ctx.lattice, opts);
    double dom = 0.0;
    for (int k = 0; k <= sol.n_steps(); ++k) {
        for (int j = 0; j <= k; ++j) dom = std::max(dom, sol.y[k][j] - sn.triple.y[k][j]);
    }
    const bool dom_ok = dom <= ctx.validation.tol * rep.scale;
    // Y^n may dip below h; only the Snell envelope dominates it.
    const bool ok = rep.backward_ok && rep.k_monotone_ok && rep.k0_ok && rep.terminal_ok && dom_ok;

    write_csv(ctx.cfg.out / "penalized.csv", [&](std::ostream& os) { write_solution_csv(os, sol); });
    nlohmann::json doc;
    doc["n"] = ctx.cfg.penalty_n;
    doc["y0"] = sol.y0();
    doc["snell_y0"] = sn.triple.y0();
    doc["snell_domination_violation"] = dom;
    doc["validation"] = to_json(rep);
    write_json(ctx.cfg.out / "penalized.json", doc);

    s.put("n", ctx.cfg.penalty_n);
    s.put("Y0", sol.y0());
    s.put("snell_Y0", sn.triple.y0());
    s.put("gap", std::abs(sn.triple.y0() - sol.y0()));
    s.put("obstacle_violation", rep.obstacle_violation);
    s.flag("backward_equation", rep.backward_ok);
    s.flag("snell_domination", dom_ok);
    return ok;
}

bool run_convergence(Context& ctx, Summary& s) {
    const auto schedule = ctx.cfg.schedule.empty() ? default_schedule() : ctx.cfg.schedule;
    const auto trace = run_sweep(ctx.lattice, ctx.spec, schedule, {ctx.paths, ctx.cfg.threads});
    emit_convergence_table(trace, ctx.cfg.out / "convergence.csv");
    const auto bound = check_uniform_bound(trace, ctx.spec);

    const double tol = ctx.cfg.tol;
    const double mono = *std::max_element(trace.monotonicity_violation.begin(), trace.monotonicity_violation.end());
    const double dom = *std::max_element(trace.domination_violation.begin(), trace.domination_violation.end());
    double neg_rise = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        neg_rise = std::max(neg_rise, trace.negative_part_norm[i] - trace.negative_part_norm[i - 1]);
    }
    std::vector<double> gap(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) gap[i] = std::abs(trace.y0[i] - trace.snell_y0);
    const double tail_limit =
        ctx.cfg.tail_tol_rel * (trace.snell_y0 != 0.0 ? std::abs(trace.snell_y0) : 1.0);

    // Ratios over the last three doublings; a gap already at rounding level has no rate.
    std::vector<double> ratios;
    bool ratio_ok = true;
    for (std::size_t i = trace.size() - 1; i >= 1 && ratios.size() < 3; --i) {
        if (trace.n_values[i] != 2.0 * trace.n_values[i - 1]) break;
        if (gap[i - 1] <= 1e-12) break;
        const double q = gap[i] > 0.0 ? gap[i - 1] / gap[i] : std::numeric_limits<double>::infinity();
        ratios.insert(ratios.begin(), q);
        ratio_ok = ratio_ok && q >= ctx.cfg.ratio_min && q <= ctx.cfg.ratio_max;
    }

    const bool mono_ok = mono <= tol;
    const bool dom_ok = dom <= tol;
    const bool neg_ok = neg_rise <= tol;
    const bool tail_ok = gap.back() <= tail_limit;

    nlohmann::json doc;
    doc["snell_y0"] = trace.snell_y0;
    doc["snell_k_t_root"] = trace.snell_k_t_root;
    doc["n"] = trace.n_values;
    doc["y0"] = trace.y0;
    doc["y0_gap"] = gap;
    doc["gap_ratios"] = ratios;
    doc["sup_gap"] = trace.sup_gap;
    doc["monotonicity_violation"] = trace.monotonicity_violation;
    doc["domination_violation"] = trace.domination_violation;
    doc["skorokhod_residual"] = trace.skorokhod_residual;
    doc["paths"] = {{"count", trace.paths.size()}, {"exact", trace.paths.exact}};
    doc["bound"] = to_json(bound);
    doc["checks"] = {{"monotone", mono_ok}, {"snell_domination", dom_ok}, {"negative_part_nonincreasing", neg_ok},
                     {"tail_gap", tail_ok},  {"gap_ratio", ratio_ok},     {"uniform_bound", bound.bounded}};
    write_json(ctx.cfg.out / "convergence.json", doc);

    s.put("snell_Y0", trace.snell_y0);
    s.put("tail_n", trace.n_values.back());
    s.put("tail_Y0", trace.y0.back());
    s.put("tail_gap", gap.back());
    std::string rs;
    for (double q : ratios) rs += (rs.empty() ? "" : ",") + format_real(q);
    s.put("gap_ratios", rs);
    s.flag("monotone", mono_ok);
    s.flag("snell_domination", dom_ok);
    s.flag("negative_part_nonincreasing", neg_ok);
    s.flag("tail_gap", tail_ok);
    s.flag("gap_ratio", ratio_ok);
    s.flag("uniform_bound", bound.bounded);
    return mono_ok && dom_ok && neg_ok && tail_ok && ratio_ok && bound.bounded;
}

PdeGrid pde_grid(const ExperimentConfig& cfg) {
    PdeGrid g;
    if (cfg.pde.x_min) {
        g = PdeGrid{*cfg.pde.x_min, *cfg.pde.x_max, cfg.pde.m_nodes, TimeGrid(cfg.pde.steps, cfg.horizon)};
    } else {
        g = suggest_pde_grid(cfg.model, cfg.horizon, cfg.pde.m_nodes, cfg.pde.steps);
    }
    g.boundary = cfg.pde.boundary;
    g.validate();
    return g;
}

PdeField solve_pde(const ExperimentConfig& cfg, const ProblemSpec& spec, PdeMethod method) {
    const auto grid = pde_grid(cfg);
    return method == PdeMethod::projected ? solve_pde_projected(grid, spec, cfg.model, cfg.pde.psor)
                                          : solve_pde_penalized(grid, spec, cfg.model, cfg.pde.penalty, cfg.pde.psor);
}

bool run_pde(Context& ctx, Summary& s) {
    const auto field = solve_pde(ctx.cfg, ctx.spec, ctx.cfg.pde.method);
    const auto comp = complementarity(field, ctx.spec, ctx.cfg.model);
    write_csv(ctx.cfg.out / "pde.csv", [&](std::ostream& os) { write_pde_csv(os, field, ctx.spec); });
    nlohmann::json doc;
    doc["method"] = ctx.cfg.pde.method == PdeMethod::projected ? "projected" : "penalized";
    doc["x_min"] = field.grid.x_min;
    doc["x_max"] = field.grid.x_max;
    doc["m_nodes"] = field.grid.m_nodes;
    doc["steps"] = field.grid.time.n_steps();
    doc["total_iterations"] = field.total_iterations;
    doc["complementarity"] = to_json(comp);
    const double u0 = field.value_at(0.0, ctx.cfg.model.x0);
    doc["u0"] = u0;
    write_json(ctx.cfg.out / "pde.json", doc);

    const bool projected = ctx.cfg.pde.method == PdeMethod::projected;
    const bool ok = !projected || comp.min_gap >= -ctx.cfg.tol * scale_of(u0);
    s.put("u0", u0);
    s.put("x_min", field.grid.x_min);
    s.put("x_max", field.grid.x_max);
    s.put("iterations", static_cast<double>(field.total_iterations));
    s.put("min_gap", comp.min_gap);
    s.put("max_min_term", comp.max_min_term);
    if (projected) s.flag("obstacle_domination", ok);
    return ok;
}

bool run_verify(Context& ctx, Summary& s) {
    const auto sn = solve_snell(ctx.lattice, ctx.spec);
    const auto rep = validate_solution(sn.triple, ctx.spec, ctx.lattice, ctx.validation);
    s.put("Y0", sn.triple.y0());
    s.flag("validation", rep.all_pass());
    std::vector<nlohmann::json> lines;
    auto val = to_json(rep);
    val["kind"] = "validation";
    val["instance"] = ctx.spec.label;
    lines.push_back(val);
    bool ok = rep.all_pass();

    if (rep.skorokhod_ok) {
        const EstimateReport reports[] = {check_y_estimate(sn.triple, ctx.spec, ctx.lattice, ctx.paths),
                                          check_z_estimate(sn.triple, ctx.spec, ctx.lattice, ctx.paths),
                                          check_k_estimate(sn.triple, ctx.spec, ctx.lattice, ctx.paths)};
        std::vector<nlohmann::json> baseline;
        if (ctx.cfg.baseline) baseline = read_jsonl(*ctx.cfg.baseline);
        const auto& m = ctx.cfg.model;
        const nlohmann::json model{{"kind", m.kind == ModelKind::geometric ? "geometric" : "arithmetic"},
                                   {"drift", m.drift},
                                   {"vol", m.vol},
                                   {"x0", m.x0}};
        for (const auto& e : reports) {
            auto j = to_json(e);
            j["model"] = model;
            j["steps"] = ctx.cfg.steps;
            j["horizon"] = ctx.cfg.horizon;
            s.put(e.kind + "_ratio", e.empirical_ratio);
            if (ctx.cfg.baseline) {
                const auto it = std::find_if(baseline.begin(), baseline.end(), [&](const nlohmann::json& b) {
                    return b.value("kind", "") == e.kind && b.value("instance", "") == e.instance &&
                           b.value("model", nlohmann::json()) == model && b.value("steps", 0) == ctx.cfg.steps &&
                           b.value("horizon", 0.0) == ctx.cfg.horizon;
                });
                bool within = false;
                if (it != baseline.end() && (*it)["empirical_ratio"].is_number()) {
                    const double ref = (*it)["empirical_ratio"].get<double>();
                    within = e.empirical_ratio <= ref * (1.0 + ctx.cfg.baseline_slack);
                    j["baseline_ratio"] = ref;
                }
                j["within_baseline"] = within;
                s.flag(e.kind + "_baseline", within);
                ok = ok && within;
            }
            lines.push_back(j);
        }
    }

    const auto again = solve_snell(ctx.lattice, ctx.spec);
    const auto stab = check_stability(sn.triple, again.triple, ctx.spec, ctx.spec, ctx.lattice, ctx.paths);
    auto sj = to_json(stab);
    sj["kind"] = "uniqueness";
    sj["instance"] = ctx.spec.label;
    lines.push_back(sj);
    s.flag("uniqueness", stab.uniqueness_ok);
    ok = ok && stab.uniqueness_ok;

    std::string text;
    for (const auto& l : lines) text += l.dump() + "\n";
    write_text_file(ctx.cfg.out / "estimates.jsonl", text);
    return ok;
}

bool run_crosscheck(Context& ctx, Summary& s) {
    const auto sn = solve_snell(ctx.lattice, ctx.spec);
    const double n_tail = ctx.cfg.schedule.empty() ? default_schedule().back() : ctx.cfg.schedule.back();
    const auto pen = solve_penalized(ctx.lattice, ctx.spec, n_tail);
    const auto field = solve_pde(ctx.cfg, ctx.spec, PdeMethod::projected);
    const double ys = sn.triple.y0();
    const double yp = pen.y0();
    const double u = field.value_at(0.0, ctx.cfg.model.x0);
    const double scale = scale_of(ys);
    const double g_sp = std::abs(ys - yp) / scale;
    const double g_su = std::abs(ys - u) / scale;
    const double g_pu = std::abs(yp - u) / scale;
    const bool ok_sp = g_sp <= ctx.cfg.snell_penalty_tol;
    const bool ok_su = g_su <= ctx.cfg.snell_pde_tol;
    const bool ok_pu = g_pu <= ctx.cfg.penalty_pde_tol;

    nlohmann::json doc{{"snell_y0", ys},
                       {"penalty_n", n_tail},
                       {"penalized_y0", yp},
                       {"pde_u0", u},
                       {"gap_snell_penalty", g_sp},
                       {"gap_snell_pde", g_su},
                       {"gap_penalty_pde", g_pu},
                       {"pass", ok_sp && ok_su && ok_pu}};
    write_json(ctx.cfg.out / "crosscheck.json", doc);

    s.put("snell_Y0", ys);
    s.put("penalized_Y0", yp);
    s.put("pde_u0", u);
    s.put("gap_snell_penalty", g_sp);
    s.put("gap_snell_pde", g_su);
    s.put("gap_penalty_pde", g_pu);
    s.flag("snell_penalty", ok_sp);
    s.flag("snell_pde", ok_su);
    s.flag("penalty_pde", ok_pu);
    return ok_sp && ok_su && ok_pu;
}

}  // namespace

int run(const ExperimentConfig& config, std::ostream& out) {
    Summary s(out, config.quiet);
    const TimeGrid grid(config.steps, config.horizon);
    Context ctx{config,
                make_problem(config.generator, config.terminal, config.obstacle, config.kappa, config.p),
                build_lattice(config.model, grid),
                PathSetOptions{16, 8192, config.seed},
                ValidationOptions{config.tol, true}};
    if (terminal_obstacle_violation(ctx.spec, ctx.lattice) > 0.0) {
        throw InvalidArgument("cli_runner", "terminal value lies below the obstacle at maturity");
    }

    s.put("command", command_name(config.command));
    s.put("instance", ctx.spec.label);
    bool ok = false;
    switch (config.command) {
        case Command::solve: ok = run_solve(ctx, s); break;
        case Command::penalize: ok = run_penalize(ctx, s); break;
        case Command::pde: ok = run_pde(ctx, s); break;
        case Command::verify: ok = run_verify(ctx, s); break;
        case Command::convergence: ok = run_convergence(ctx, s); break;
        case Command::crosscheck: ok = run_crosscheck(ctx, s); break;
    }
    s.put("status", ok ? "ok" : "invariant_failure");
    write_text_file(config.out / "summary.txt", s.text());
    return ok ? 0 : 1;
}

}  // namespace rbsde::app
