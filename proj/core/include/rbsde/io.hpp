#ifndef RBSDE_IO_HPP
#define RBSDE_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rbsde/estimates.hpp"
#include "rbsde/lattice.hpp"
#include "rbsde/pde.hpp"
#include "rbsde/penalty.hpp"
#include "rbsde/snell.hpp"
#include "rbsde/solution.hpp"

namespace rbsde {

/**
 * Shortest decimal string that parses back to the same double; integral
 * values keep a trailing ".0" ("1.0", not "1"). Non-finite values print as
 * "nan", "inf" or "-inf".
 */
std::string format_real(double v);

/// Parses a field written by format_real; throws InvalidArgument on junk.
double parse_real(const std::string& text);

// CSV layouts (header row first, comma separated, LF line endings):
//   lattice:    step,node,state,up_prob            (up_prob empty on the last step)
//   paths:      step,path,state,increment          (increment empty on the last step)
//   snell:      k,j,state,Y,Z,dK,continuation,exercised
//   solution:   k,j,Y,Z,dK
//   pde:        t,x,u,u_minus_h,exercised
//   trace:      n,Y0,sup_gap,neg_part_norm,K_T,bound_quantity

void write_lattice_csv(std::ostream& os, const Lattice& lattice);
void write_paths_csv(std::ostream& os, const PathBundle& bundle);
void write_snell_csv(std::ostream& os, const SnellOutput& out, const Lattice& lattice);
void write_solution_csv(std::ostream& os, const SolutionTriple& sol);
/// Rebuilds a triple written by write_solution_csv on the given grid.
SolutionTriple read_solution_csv(std::istream& is, const TimeGrid& grid);
void write_pde_csv(std::ostream& os, const PdeField& field, const ProblemSpec& spec);

struct TraceRow {
    double n = 0.0;
    double y0 = 0.0;
    double sup_gap = 0.0;
    double neg_part_norm = 0.0;
    double k_t = 0.0;
    double bound_quantity = 0.0;

    bool operator==(const TraceRow&) const = default;
};

std::vector<TraceRow> trace_rows(const PenalizationTrace& trace);
void write_trace_csv(std::ostream& os, const PenalizationTrace& trace);
std::vector<TraceRow> read_trace_csv(std::istream& is);

/// Convergence table of a sweep written to `path`; throws Error on I/O failure.
void emit_convergence_table(const PenalizationTrace& trace, const std::filesystem::path& path);

nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const EstimateReport& r);
nlohmann::json to_json(const StabilityReport& r);
nlohmann::json to_json(const BoundReport& r);
nlohmann::json to_json(const ComplementarityReport& r);
nlohmann::json to_json(const std::vector<FeynmanKacProbe>& probes);
nlohmann::json to_json(const ChiScanReport& r);
nlohmann::json to_json(const GrowthReport& r);

/// Appends one compact JSON document plus newline.
void append_jsonl(const std::filesystem::path& path, const nlohmann::json& doc);
/// Reads every line of a JSON-lines file (missing file -> empty).
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories; throws Error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rbsde

#endif  // RBSDE_IO_HPP
