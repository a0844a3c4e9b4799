#include "rbsde/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "rbsde/error.hpp"

namespace rbsde {

namespace {

constexpr const char* kModule = "io";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

nlohmann::json real(double v) {
    if (std::isfinite(v)) return v;
    return format_real(v);
}

}  // namespace

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::string s = fmt::format("{}", v);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

double parse_real(const std::string& text) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (!text.empty() && text.front() == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || begin == end) {
        throw InvalidArgument(kModule, fmt::format("not a number: '{}'", text));
    }
    return v;
}

void write_lattice_csv(std::ostream& os, const Lattice& lattice) {
    os << "step,node,state,up_prob\n";
    const int n = lattice.n_steps();
    for (int k = 0; k <= n; ++k) {
        for (int j = 0; j <= k; ++j) {
            os << k << ',' << j << ',' << format_real(lattice.state(k, j)) << ',';
            if (k < n) os << format_real(lattice.up_prob(k)[j]);
            os << '\n';
        }
    }
}

void write_paths_csv(std::ostream& os, const PathBundle& bundle) {
    os << "step,path,state,increment\n";
    const auto steps = bundle.states.cols();
    for (std::size_t i = 0; i < bundle.states.rows(); ++i) {
        for (std::size_t k = 0; k < steps; ++k) {
            os << k << ',' << i << ',' << format_real(bundle.states(i, k)) << ',';
            if (k + 1 < steps) os << format_real(bundle.brownian_increments(i, k));
            os << '\n';
        }
    }
}

void write_snell_csv(std::ostream& os, const SnellOutput& out, const Lattice& lattice) {
    os << "k,j,state,Y,Z,dK,continuation,exercised\n";
    const auto& t = out.triple;
    for (int k = 0; k <= t.n_steps(); ++k) {
        for (int j = 0; j <= k; ++j) {
            os << k << ',' << j << ',' << format_real(lattice.state(k, j)) << ',' << format_real(t.y[k][j]) << ','
               << format_real(t.z[k][j]) << ',' << format_real(t.dk[k][j]) << ','
               << format_real(out.continuation[k][j]) << ',' << (out.exercise[k][j] ? 1 : 0) << '\n';
        }
    }
}

void write_solution_csv(std::ostream& os, const SolutionTriple& sol) {
    os << "k,j,Y,Z,dK\n";
    for (int k = 0; k <= sol.n_steps(); ++k) {
        for (int j = 0; j <= k; ++j) {
            os << k << ',' << j << ',' << format_real(sol.y[k][j]) << ',' << format_real(sol.z[k][j]) << ','
               << format_real(sol.dk[k][j]) << '\n';
        }
    }
}

SolutionTriple read_solution_csv(std::istream& is, const TimeGrid& grid) {
    SolutionTriple sol(grid);
    std::string line;
    if (!std::getline(is, line) || line != "k,j,Y,Z,dK") {
        throw InvalidArgument(kModule, "solution CSV: missing header 'k,j,Y,Z,dK'");
    }
    long expected = static_cast<long>(grid.n_steps() + 1) * (grid.n_steps() + 2) / 2;
    long rows = 0;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5) {
            throw InvalidArgument(kModule, fmt::format("solution CSV line {}: expected 5 fields", lineno));
        }
        const int k = std::stoi(cells[0]);
        const int j = std::stoi(cells[1]);
        if (k < 0 || k > grid.n_steps() || j < 0 || j > k) {
            throw InvalidArgument(kModule, fmt::format("solution CSV line {}: node ({}, {}) off the grid", lineno, k, j));
        }
        sol.y[k][j] = parse_real(cells[2]);
        sol.z[k][j] = parse_real(cells[3]);
        sol.dk[k][j] = parse_real(cells[4]);
        ++rows;
    }
    if (rows != expected) {
        throw InvalidArgument(kModule, fmt::format("solution CSV: {} rows, expected {}", rows, expected));
    }
    return sol;
}

void write_pde_csv(std::ostream& os, const PdeField& field, const ProblemSpec& spec) {
    os << "t,x,u,u_minus_h,exercised\n";
    const auto& g = field.grid;
    for (int k = 0; k <= g.time.n_steps(); ++k) {
        const double t = g.time.time(k);
        for (int i = 0; i < g.m_nodes; ++i) {
            const double x = g.x(i);
            const double gap = field.u[k][i] - spec.h(t, x);
            os << format_real(t) << ',' << format_real(x) << ',' << format_real(field.u[k][i]) << ','
               << format_real(gap) << ',' << (std::abs(gap) <= 1e-12 ? 1 : 0) << '\n';
        }
    }
}

std::vector<TraceRow> trace_rows(const PenalizationTrace& trace) {
    std::vector<TraceRow> rows;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        rows.push_back({trace.n_values[i], trace.y0[i], trace.sup_gap[i], trace.negative_part_norm[i],
                        trace.k_t_root[i], trace.bound_quantity[i]});
    }
    return rows;
}

void write_trace_csv(std::ostream& os, const PenalizationTrace& trace) {
    os << "n,Y0,sup_gap,neg_part_norm,K_T,bound_quantity\n";
    for (const auto& r : trace_rows(trace)) {
        os << format_real(r.n) << ',' << format_real(r.y0) << ',' << format_real(r.sup_gap) << ','
           << format_real(r.neg_part_norm) << ',' << format_real(r.k_t) << ',' << format_real(r.bound_quantity)
           << '\n';
    }
}

std::vector<TraceRow> read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "n,Y0,sup_gap,neg_part_norm,K_T,bound_quantity") {
        throw InvalidArgument(kModule, "trace CSV: unexpected header");
    }
    std::vector<TraceRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_csv(line);
        if (c.size() != 6) throw InvalidArgument(kModule, "trace CSV: expected 6 fields");
        rows.push_back({parse_real(c[0]), parse_real(c[1]), parse_real(c[2]), parse_real(c[3]), parse_real(c[4]),
                        parse_real(c[5])});
    }
    return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error(kModule, fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(kModule, fmt::format("cannot open {} for writing", path.string()));
    os << text;
    if (!os) throw Error(kModule, fmt::format("write to {} failed", path.string()));
}

void emit_convergence_table(const PenalizationTrace& trace, const std::filesystem::path& path) {
    if (trace.size() == 0) throw InvalidArgument(kModule, "empty penalization trace");
    std::ostringstream os;
    write_trace_csv(os, trace);
    write_text_file(path, os.str());
}

nlohmann::json to_json(const ValidationReport& r) {
    auto item = [](bool pass, double value) { return nlohmann::json{{"pass", pass}, {"value", real(value)}}; };
    nlohmann::json j;
    j["obstacle_domination"] = item(r.obstacle_ok, r.obstacle_violation);
    j["obstacle_domination"]["worst_node"] = {r.obstacle_worst.k, r.obstacle_worst.j};
    j["k_monotone"] = item(r.k_monotone_ok, r.min_k_increment);
    j["k0"] = item(r.k0_ok, r.k0);
    j["skorokhod"] = item(r.skorokhod_ok, r.skorokhod_residual);
    j["skorokhod"]["applicable"] = r.skorokhod_checked;
    j["backward_equation"] = item(r.backward_ok, r.backward_residual);
    j["terminal"] = item(r.terminal_ok, r.terminal_residual);
    j["tolerance"] = real(r.tol);
    j["all_pass"] = r.all_pass();
    return j;
}

nlohmann::json to_json(const EstimateReport& r) {
    return {{"kind", r.kind},
            {"instance", r.instance},
            {"p", real(r.p)},
            {"lhs", real(r.lhs)},
            {"rhs_data_functional", real(r.rhs_data_functional)},
            {"empirical_ratio", real(r.empirical_ratio)}};
}

nlohmann::json to_json(const StabilityReport& r) {
    return {{"lhs", real(r.lhs)},           {"delta_y_norm", real(r.delta_y_norm)},
            {"delta_y_max", real(r.delta_y_max)}, {"delta_data", real(r.delta_data)},
            {"delta_l", real(r.delta_l)},   {"psi_T", real(r.psi_T)},
            {"rhs", real(r.rhs)},           {"ratio", real(r.ratio)},
            {"identical_data", r.identical_data}, {"uniqueness_ok", r.uniqueness_ok}};
}

nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json q = nlohmann::json::array();
    for (double v : r.quantity) q.push_back(real(v));
    return {{"quantity", q},
            {"reference", real(r.reference)},
            {"limit", real(r.limit)},
            {"worst", real(r.worst)},
            {"bounded", r.bounded}};
}

nlohmann::json to_json(const ComplementarityReport& r) {
    return {{"min_gap", real(r.min_gap)},
            {"min_residual", real(r.min_residual)},
            {"max_min_term", real(r.max_min_term)},
            {"max_product", real(r.max_product)}};
}

nlohmann::json to_json(const std::vector<FeynmanKacProbe>& probes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : probes) {
        arr.push_back({{"t", real(p.t)},
                       {"x", real(p.x)},
                       {"u", real(p.u)},
                       {"y", real(p.y)},
                       {"abs_err", real(p.abs_err)},
                       {"rel_err", real(p.rel_err)}});
    }
    return arr;
}

nlohmann::json to_json(const ChiScanReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < r.c_grid.size(); ++i) {
        rows.push_back({{"C", real(r.c_grid[i])}, {"min_value", real(r.min_value[i])}});
    }
    nlohmann::json j{{"A", real(r.A)}, {"kappa", real(r.kappa)}, {"scan", rows}, {"passed", r.passed}};
    j["witness"] = r.witness ? real(*r.witness) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const GrowthReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < r.radii.size(); ++i) {
        rows.push_back({{"radius", real(r.radii[i])}, {"weighted", real(r.weighted[i])}});
    }
    return {{"values", rows}, {"decreasing", r.decreasing}};
}

void append_jsonl(const std::filesystem::path& path, const nlohmann::json& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::app);
    if (!os) throw Error(kModule, fmt::format("cannot open {} for appending", path.string()));
    os << doc.dump() << '\n';
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::vector<nlohmann::json> out;
    std::ifstream is(path);
    if (!is) return out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidArgument(kModule, fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        }
    }
    return out;
}

}  // namespace rbsde
