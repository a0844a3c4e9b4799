#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "app.hpp"
#include "rbsde/error.hpp"
#include "rbsde/io.hpp"
#include "rbsde/penalty.hpp"

using namespace rbsde;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "rbsde_tests" / name;
    fs::remove_all(dir);
    return dir;
}

app::ExperimentConfig config_from(const std::string& text) {
    std::istringstream is(text);
    return app::parse_config(is, "test.ini");
}

const char* kConstant = R"([experiment]
command = solve
[model]
kind = arithmetic
vol = 1
[grid]
steps = 16
[problem]
generator = zero
terminal = constant:1
obstacle = zero
)";

const char* kPut = R"([model]
kind = geometric
drift = 0.06
vol = 0.4
x0 = 36
[grid]
horizon = 1
steps = 128
[problem]
generator = linear_discount:0.06
terminal = put_payoff:40
obstacle = put_payoff:40
[pde]
x_min = 0
x_max = 160
m_nodes = 161
steps = 100
)";

}  // namespace

TEST_CASE("format_real round trips") {
    CHECK(format_real(1.0) == "1.0");
    CHECK(format_real(0.0) == "0.0");
    CHECK(format_real(-3.0) == "-3.0");
    CHECK(format_real(0.1) == "0.1");
    CHECK(format_real(1e300) == "1e+300");
    CHECK(format_real(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_real(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_real(std::nan("")) == "nan");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = u(rng) * std::pow(10.0, i % 40 - 20);
        CHECK(parse_real(format_real(v)) == v);
    }
    CHECK(std::isinf(parse_real("inf")));
    CHECK_THROWS_AS(parse_real("1.5x"), InvalidArgument);
    CHECK_THROWS_AS(parse_real(""), InvalidArgument);
}

TEST_CASE("convergence table") {
    const auto lat = build_lattice(ForwardModel::geometric(0.06, 0.4, 36.0), TimeGrid(32, 1.0));
    const auto spec = make_problem("linear_discount:0.06", "put_payoff:40", "put_payoff:40");
    const auto dir = scratch("trace");
    SUBCASE("single row") {
        const auto trace = run_sweep(lat, spec, {8.0});
        emit_convergence_table(trace, dir / "one.csv");
        std::ifstream is(dir / "one.csv");
        const auto rows = read_trace_csv(is);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0] == trace_rows(trace)[0]);
    }
    SUBCASE("eleven rows, n increasing, values round trip, byte-identical rerun") {
        const auto trace = run_sweep(lat, spec, default_schedule());
        emit_convergence_table(trace, dir / "a.csv");
        emit_convergence_table(run_sweep(lat, spec, default_schedule()), dir / "b.csv");
        const auto text = slurp(dir / "a.csv");
        CHECK(text.rfind("n,Y0,sup_gap,neg_part_norm,K_T,bound_quantity\n", 0) == 0);
        CHECK(text == slurp(dir / "b.csv"));
        std::istringstream is(text);
        const auto rows = read_trace_csv(is);
        REQUIRE(rows.size() == 11);
        CHECK(rows == trace_rows(trace));
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].n > rows[i - 1].n);
    }
    SUBCASE("empty trace") {
        CHECK_THROWS_AS(emit_convergence_table(PenalizationTrace{}, dir / "x.csv"), InvalidArgument);
    }
}

TEST_CASE("CSV layouts") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(2, 1.0));
    std::ostringstream os;
    write_lattice_csv(os, lat);
    CHECK(os.str() == "step,node,state,up_prob\n0,0,0.0,0.5\n1,0,-0.7071067811865476,0.5\n"
                      "1,1,0.7071067811865476,0.5\n2,0,-1.4142135623730951,\n2,1,0.0,\n"
                      "2,2,1.4142135623730951,\n");
    const auto out = solve_snell(lat, make_problem("zero", "constant:1", "zero"));
    std::ostringstream sn;
    write_snell_csv(sn, out, lat);
    CHECK(sn.str().rfind("k,j,state,Y,Z,dK,continuation,exercised\n", 0) == 0);
    std::ostringstream bad;
    bad << "k,j,Y,Z,dK\n0,0,1.0,0.0,0.0\n";
    std::istringstream in(bad.str());
    CHECK_THROWS_AS(read_solution_csv(in, lat.grid()), InvalidArgument);
}

TEST_CASE("JSON reports") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(4, 1.0));
    const auto spec = make_problem("zero", "constant:1", "zero");
    const auto j = to_json(validate_solution(solve_snell(lat, spec).triple, spec, lat));
    CHECK(j["all_pass"] == true);
    CHECK(j["skorokhod"]["pass"] == true);
    EstimateReport e{"y", "demo", 1.5, 2.0, 0.0, std::numeric_limits<double>::infinity()};
    CHECK(to_json(e)["empirical_ratio"] == "inf");
    const auto dir = scratch("jsonl");
    append_jsonl(dir / "r.jsonl", to_json(e));
    append_jsonl(dir / "r.jsonl", j);
    const auto back = read_jsonl(dir / "r.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0]["kind"] == "y");
    CHECK(read_jsonl(dir / "missing.jsonl").empty());
}

TEST_CASE("config parsing") {
    SUBCASE("defaults and values") {
        const auto c = config_from(kPut);
        CHECK(c.command == app::Command::solve);
        CHECK(c.p == 1.5);
        CHECK(c.model.kind == ModelKind::geometric);
        CHECK(c.steps == 128);
        CHECK(c.pde.x_max == 160.0);
        CHECK(c.seed == 20240607u);
    }
    SUBCASE("p outside (1,2)") {
        try {
            config_from("[problem]\np = 2.5\n");
            FAIL("expected an error");
        } catch (const app::ConfigError& e) {
            const std::string what = e.what();
            CHECK(what.find("p must lie in (1,2)") != std::string::npos);
            CHECK(what.find("test.ini:2") != std::string::npos);
        }
    }
    SUBCASE("line and field diagnostics") {
        auto expect = [](const std::string& text, const std::string& fragment) {
            try {
                config_from(text);
                FAIL("accepted: " << text);
            } catch (const app::ConfigError& e) {
                INFO(e.what());
                CHECK(std::string(e.what()).find(fragment) != std::string::npos);
            }
        };
        expect("[grid]\n\nsteps = ten\n", "test.ini:3: [grid] steps: 'ten' is not an integer");
        expect("[grid]\nsteps = 4\n[model]\ncolour = red\n", "test.ini:4: [model] colour: unknown key");
        expect("[problem]\ngenerator = cubic\n", "[problem] generator");
        expect("[experiment]\ncommand = fly\n", "unknown command 'fly'");
        expect("[pde]\nomega = 2.5\n", "[pde] omega");
        expect("[penalty]\nschedule = 1, 4, 2\n", "strictly increasing");
        expect("[model]\nkind = geometric\nx0 = -1\n", "[model] x0");
        expect("[grid\n", "test.ini:1");
    }
}

TEST_CASE("run: constant instance prints Y0=1.0") {
    auto c = config_from(kConstant);
    c.out = scratch("constant");
    std::ostringstream os;
    CHECK(app::run(c, os) == 0);
    CHECK(os.str().find("\nY0=1.0\n") != std::string::npos);
    CHECK(fs::exists(c.out / "snell.csv"));
    CHECK(fs::exists(c.out / "validation.json"));
    CHECK(slurp(c.out / "summary.txt") == os.str());
}

TEST_CASE("run: every command on a small American put, deterministic") {
    for (const auto cmd : {app::Command::solve, app::Command::penalize, app::Command::pde, app::Command::verify,
                           app::Command::convergence, app::Command::crosscheck}) {
        auto c = config_from(kPut);
        c.command = cmd;
        c.quiet = true;
        c.out = scratch("det_a_" + app::command_name(cmd));
        std::ostringstream a;
        const int code = app::run(c, a);
        CHECK(a.str().empty());
        INFO(app::command_name(cmd));
        CHECK(code == 0);
        auto c2 = c;
        c2.out = scratch("det_b_" + app::command_name(cmd));
        std::ostringstream b;
        CHECK(app::run(c2, b) == code);
        for (const auto& entry : fs::directory_iterator(c.out)) {
            INFO(entry.path().filename().string());
            CHECK(slurp(entry.path()) == slurp(c2.out / entry.path().filename()));
        }
    }
}

TEST_CASE("run: invariant failure gives exit 1") {
    auto c = config_from(kPut);
    c.command = app::Command::convergence;
    c.quiet = true;
    c.ratio_min = 1.99;
    c.ratio_max = 2.0;
    c.out = scratch("fail");
    std::ostringstream os;
    CHECK(app::run(c, os) == 1);
    CHECK(slurp(c.out / "summary.txt").find("status=invariant_failure") != std::string::npos);
}
