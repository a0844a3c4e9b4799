#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rbsde/error.hpp"
#include "rbsde/io.hpp"
#include "rbsde/norms.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/snell.hpp"
#include "rbsde/solution.hpp"

using namespace rbsde;

TEST_CASE("LpExponent") {
    const LpExponent p(1.5);
    CHECK(p.q() == doctest::Approx(3.0));
    CHECK(1.0 / p.p() + 1.0 / p.q() == doctest::Approx(1.0));
    CHECK(p.c() == doctest::Approx(0.375));
    CHECK(LpExponent().p() == 1.5);
    for (double bad : {1.0, 2.0, 2.5, 0.5, std::nan("")}) {
        try {
            LpExponent e(bad);
            FAIL("accepted p = " << bad);
        } catch (const InvalidArgument& e) {
            CHECK(std::string(e.what()).find("p must lie in (1,2)") != std::string::npos);
        }
    }
}

TEST_CASE("registry forms") {
    CHECK(make_generator("zero")(0, 1, 2, 3) == 0.0);
    CHECK(make_generator("constant:2.5")(0, 1, 2, 3) == 2.5);
    CHECK(make_generator("linear_discount:0.06")(0, 1, 10.0, 3) == doctest::Approx(-0.6));
    CHECK(make_terminal("put_payoff:40")(36.0) == 4.0);
    CHECK(make_terminal("put_payoff:40")(44.0) == 0.0);
    CHECK(make_terminal("call_payoff:40")(44.0) == 4.0);
    CHECK(make_terminal("identity")(-3.0) == -3.0);
    CHECK(make_obstacle("constant:-1e9")(0.3, 5.0) == -1e9);
    CHECK(generator_lipschitz("linear_discount:0.06") == 0.06);
    CHECK(generator_lipschitz("constant:4") == 0.0);
    CHECK_THROWS_AS(make_generator("quadratic"), InvalidArgument);
    CHECK_THROWS_AS(make_terminal("put_payoff"), InvalidArgument);
    CHECK_THROWS_AS(make_terminal("zero:1"), InvalidArgument);
    CHECK_THROWS_AS(make_terminal("constant:abc"), InvalidArgument);
}

TEST_CASE("make_problem") {
    const auto spec = make_problem("linear_discount:0.06", "put_payoff:40", "put_payoff:40");
    CHECK(spec.kappa == 0.06);
    CHECK(spec.p.p() == 1.5);
    CHECK(spec.label == "f=linear_discount:0.06 g=put_payoff:40 h=put_payoff:40");
    CHECK_THROWS_AS(make_problem("linear_discount:0.5", "zero", "zero", 0.1), InvalidArgument);
    CHECK_THROWS_AS(make_problem("zero", "zero", "zero", -1.0, 2.5), InvalidArgument);
}

TEST_CASE("terminal obstacle and Lipschitz sampling") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(8, 1.0));
    CHECK(terminal_obstacle_violation(make_problem("zero", "put_payoff:0", "put_payoff:0"), lat) == 0.0);
    CHECK(terminal_obstacle_violation(make_problem("zero", "zero", "constant:0.5"), lat) == 0.5);
    const auto spec = make_problem("linear_discount:0.3", "zero", "zero");
    const double l = sampled_lipschitz(spec, lat, 500, 1);
    CHECK(l <= spec.kappa + 1e-12);
    CHECK(l > 0.0);
}

TEST_CASE("contraction bound is enforced") {
    const auto spec = make_problem("linear_discount:-3", "zero", "constant:-1e9");
    try {
        require_contraction(spec, TimeGrid(2, 1.0), "snell_solver");
        FAIL("expected an error");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("kappa*dt < 1") != std::string::npos);
    }
    CHECK_NOTHROW(require_contraction(spec, TimeGrid(4, 1.0), "snell_solver"));
}

TEST_CASE("sp_norm") {
    const LpExponent p(1.5);
    CHECK(sp_norm(Table(5, 7, 3.0), p) == doctest::Approx(3.0));
    Table one(1, 3);
    one(0, 0) = 0.0;
    one(0, 1) = -2.0;
    one(0, 2) = 1.0;
    CHECK(sp_norm(one, p) == doctest::Approx(2.0));
    CHECK_THROWS_AS(sp_norm(Table(), p), InvalidArgument);
}

TEST_CASE("sp_norm on simulated GBM paths against a reverse-order recomputation") {
    const LpExponent p(1.5);
    const auto b = simulate_paths(ForwardModel::geometric(0.05, 0.2, 1.0), TimeGrid(20, 1.0), 10000, 5);
    const double v = sp_norm(b.states, p);
    // Independent accumulation: reversed path order, sup taken from the right.
    std::vector<double> sups;
    for (std::size_t i = b.states.rows(); i-- > 0;) {
        double s = 0.0;
        for (std::size_t k = b.states.cols(); k-- > 0;) s = std::max(s, std::abs(b.states(i, k)));
        sups.push_back(std::pow(s, p.p()));
    }
    long double acc = 0.0L, acc2 = 0.0L;
    for (double s : sups) {
        acc += s;
        acc2 += static_cast<long double>(s) * s;
    }
    const double n = static_cast<double>(sups.size());
    const double mean = static_cast<double>(acc / n);
    const double se = std::sqrt(static_cast<double>(acc2 / n) - mean * mean) / std::sqrt(n - 1);
    const double ref = std::pow(mean, 1.0 / p.p());
    // The two summation orders agree far inside three standard errors of the moment.
    CHECK(std::abs(std::pow(v, p.p()) - mean) <= 3.0 * se);
    CHECK(v == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("mp_norm") {
    const LpExponent p(1.5);
    CHECK(mp_norm(Table(4, 10, 0.0), 0.1, p) == 0.0);
    CHECK(mp_norm(Table(4, 10, 1.0), 0.1, p) == doctest::Approx(1.0));
    // Z = c on [0, T]: (c^2 T)^{1/2}
    const double c = 2.5, T = 3.0;
    for (double pp : {1.1, 1.5, 1.9}) {
        CHECK(mp_norm(Table(3, 30, c), T / 30, LpExponent(pp)) == doctest::Approx(c * std::sqrt(T)));
    }
    CHECK_THROWS_AS(mp_norm(Table(), 0.1, p), InvalidArgument);
    CHECK_THROWS_AS(mp_norm(Table(2, 2, 1.0), 0.0, p), InvalidArgument);
}

TEST_CASE("norm homogeneity and monotonicity") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    Table t(50, 12);
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t k = 0; k < 12; ++k) t(i, k) = nd(rng);
    }
    const LpExponent p(1.3);
    for (double lambda : {0.5, 2.0}) {
        Table s = t;
        for (std::size_t i = 0; i < 50; ++i) {
            for (std::size_t k = 0; k < 12; ++k) s(i, k) *= lambda;
        }
        CHECK(sp_norm(s, p) == doctest::Approx(lambda * sp_norm(t, p)).epsilon(1e-13));
        CHECK(mp_norm(s, 0.1, p) == doctest::Approx(lambda * mp_norm(t, 0.1, p)).epsilon(1e-13));
    }
    Table bigger = t;
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t k = 0; k < 12; ++k) bigger(i, k) = std::abs(t(i, k)) + std::abs(nd(rng));
    }
    CHECK(sp_norm(bigger, p) >= sp_norm(t, p));
}

TEST_CASE("lattice path sets") {
    const auto small = build_lattice(ForwardModel::arithmetic(0, 1, 0), TimeGrid(6, 1.0));
    const auto exact = lattice_paths(small);
    CHECK(exact.exact);
    CHECK(exact.size() == 64);
    double w = 0.0;
    for (double v : exact.weights) w += v;
    CHECK(w == doctest::Approx(1.0));

    const auto large = build_lattice(ForwardModel::arithmetic(0, 1, 0), TimeGrid(40, 1.0));
    const auto a = lattice_paths(large, {16, 300, 9});
    const auto b = lattice_paths(large, {16, 300, 9});
    CHECK_FALSE(a.exact);
    CHECK(a.size() == 300);
    CHECK(a.nodes == b.nodes);
    for (const auto& path : a.nodes) {
        REQUIRE(path.size() == 41);
        CHECK(path[0] == 0);
        for (int k = 0; k < 40; ++k) CHECK((path[k + 1] - path[k] == 0 || path[k + 1] - path[k] == 1));
    }
}

TEST_CASE("validate_solution") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(6, 1.0));
    const auto spec = make_problem("zero", "put_payoff:0.2", "put_payoff:0.2");

    SUBCASE("Snell output passes") {
        const auto out = solve_snell(lat, spec);
        const auto r = validate_solution(out.triple, spec, lat);
        CHECK(r.all_pass());
        CHECK(r.skorokhod_residual <= 1e-12);
        CHECK(r.backward_residual <= 1e-12);
        CHECK(r.obstacle_violation == 0.0);
        CHECK(r.k0 == 0.0);
    }
    SUBCASE("obstacle violation is located") {
        auto sol = solve_snell(lat, spec).triple;
        sol.y[3][1] = spec.h(lat.grid().time(3), lat.state(3, 1)) - 0.25;
        const auto r = validate_solution(sol, spec, lat);
        CHECK_FALSE(r.obstacle_ok);
        CHECK(r.obstacle_violation == doctest::Approx(0.25));
        CHECK(r.obstacle_worst.k == 3);
        CHECK(r.obstacle_worst.j == 1);
    }
    SUBCASE("negative K increment") {
        auto sol = solve_snell(lat, spec).triple;
        sol.dk[2][0] = -0.1;
        const auto r = validate_solution(sol, spec, lat);
        CHECK_FALSE(r.k_monotone_ok);
        CHECK(r.min_k_increment == doctest::Approx(-0.1));
        CHECK_FALSE(r.all_pass());
    }
    SUBCASE("shape mismatch") {
        SolutionTriple wrong(TimeGrid(5, 1.0));
        CHECK_THROWS_AS(validate_solution(wrong, spec, lat), InvalidArgument);
    }
    SUBCASE("round trip through CSV keeps the report") {
        const auto sol = solve_snell(lat, spec).triple;
        std::stringstream ss;
        write_solution_csv(ss, sol);
        const auto back = read_solution_csv(ss, lat.grid());
        CHECK(back == sol);
        CHECK(validate_solution(back, spec, lat).all_pass());
    }
}

TEST_CASE("max_abs_path_sum matches enumeration") {
    const int n = 7;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    NodeField w = make_node_field(n);
    for (auto& row : w) {
        for (double& v : row) v = nd(rng);
    }
    double brute = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
        int j = 0;
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            s += w[k][j];
            j += (mask >> k) & 1;
        }
        brute = std::max(brute, std::abs(s));
    }
    CHECK(max_abs_path_sum(w, n - 1) == doctest::Approx(brute).epsilon(1e-14));
}
