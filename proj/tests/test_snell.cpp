#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "rbsde/error.hpp"
#include "rbsde/problem.hpp"
#include "rbsde/snell.hpp"
#include "rbsde/solution.hpp"
#include "support/random_instances.hpp"

using namespace rbsde;

namespace {

const ForwardModel kPutModel = ForwardModel::geometric(0.06, 0.4, 36.0);

ProblemSpec put_spec() { return make_problem("linear_discount:0.06", "put_payoff:40", "put_payoff:40"); }

oracle::TreeData tree_of(const Lattice& lat, const ProblemSpec& spec) {
    oracle::TreeData d;
    d.n = lat.n_steps();
    d.dt = lat.grid().dt();
    d.state = [&lat](int k, int j) { return lat.state(k, j); };
    d.up_prob = [&lat](int k, int j) { return lat.up_prob(k)[j]; };
    d.time = [&lat](double k) { return lat.grid().time(static_cast<int>(k)); };
    d.f = [&spec](double t, double x) { return spec.f(t, x, 0.0, 0.0); };
    d.h = [&spec](double t, double x) { return spec.h(t, x); };
    d.g = [&spec](double x) { return spec.g(x); };
    return d;
}

}  // namespace

TEST_CASE("constant instance: Y = 1, Z = 0, K = 0") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(10, 1.0));
    const auto out = solve_snell(lat, make_problem("zero", "constant:1", "zero"));
    for (int k = 0; k <= 10; ++k) {
        for (int j = 0; j <= k; ++j) {
            CHECK(out.triple.y[k][j] == 1.0);
            CHECK(out.triple.z[k][j] == 0.0);
            CHECK(out.triple.dk[k][j] == 0.0);
        }
    }
}

TEST_CASE("f = 1 without obstacle: Y_t = T - t") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(8, 1.0));
    const auto out = solve_snell(lat, make_problem("constant:1", "zero", "constant:-1e9"));
    CHECK(out.triple.y0() == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k <= 8; ++k) {
        for (int j = 0; j <= k; ++j) {
            CHECK(out.triple.y[k][j] == doctest::Approx(1.0 - lat.grid().time(k)).epsilon(1e-14));
            CHECK(out.triple.dk[k][j] == 0.0);
        }
    }
}

TEST_CASE("American put equals the independent binomial tree") {
    const int n = 2048;
    const auto lat = build_lattice(kPutModel, TimeGrid(n, 1.0));
    const auto out = solve_snell(lat, put_spec());
    const double ref = oracle::american_put_implicit(36.0, 40.0, 0.06, 0.4, 1.0, n);
    CHECK(std::abs(out.triple.y0() - ref) <= 1e-12);
    // Textbook exp(-r dt) discounting differs only at O(dt).
    CHECK(out.triple.y0() == doctest::Approx(oracle::american_put_crr(36.0, 40.0, 0.06, 0.4, 1.0, n)).epsilon(1e-4));
    // Finite-difference reference value 7.101 for this contract.
    CHECK(std::abs(out.triple.y0() - 7.101) <= 1e-2);
}

TEST_CASE("estimate_z") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(5, 1.0));
    SUBCASE("constant next layer") {
        const std::vector<double> c(4, 2.0);
        for (double z : estimate_z(lat, c, 2)) CHECK(z == 0.0);
    }
    SUBCASE("identity function has unit slope") {
        for (int k = 0; k < 5; ++k) {
            const auto next = lat.states(k + 1);
            for (double z : estimate_z(lat, next, k)) CHECK(z == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
    SUBCASE("degenerate spacing gives zero") {
        const auto flat = build_lattice(ForwardModel::arithmetic(0.0, 0.0, 1.0), TimeGrid(3, 1.0));
        const std::vector<double> v{1.0, 5.0};
        CHECK(estimate_z(flat, v, 0)[0] == 0.0);
    }
    SUBCASE("wrong length") {
        const std::vector<double> v(3, 0.0);
        CHECK_THROWS_AS(estimate_z(lat, v, 0), InvalidArgument);
    }
}

TEST_CASE("Z_0 matches bump-and-revalue delta") {
    const int n = 2048;
    const auto spec = put_spec();
    const auto out = solve_snell(build_lattice(kPutModel, TimeGrid(n, 1.0)), spec);
    // Bumping x0 by the first lattice move shifts the whole tree by one node,
    // so the revalued prices sit on the same node set.
    const double u = std::exp(0.4 * std::sqrt(1.0 / n));
    const double up = solve_snell(build_lattice(ForwardModel::geometric(0.06, 0.4, 36.0 * u), TimeGrid(n, 1.0)), spec)
                          .triple.y0();
    const double dn = solve_snell(build_lattice(ForwardModel::geometric(0.06, 0.4, 36.0 / u), TimeGrid(n, 1.0)), spec)
                          .triple.y0();
    const double delta = (up - dn) / (36.0 * u - 36.0 / u);
    CHECK(std::abs(out.triple.z[0][0] - delta * 0.4 * 36.0) <= 1e-3 * std::abs(out.triple.z[0][0]) + 1e-3);
}

TEST_CASE("optimal stopping time") {
    SUBCASE("obstacle never binds") {
        const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(6, 1.0));
        const auto out = solve_snell(lat, make_problem("zero", "identity", "constant:-1e9"));
        const std::vector<int> a{0, 1, 2, 3, 4, 5, 6}, b{0, 0, 0, 1, 1, 2, 2};
        CHECK(optimal_stopping_time(out, a) == 6);
        CHECK(optimal_stopping_time(out, b) == 6);
    }
    SUBCASE("obstacle dominates: stop at once") {
        const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(6, 1.0));
        const auto out = solve_snell(lat, make_problem("zero", "constant:1", "constant:1"));
        const std::vector<int> a{0, 1, 1, 1, 2, 3, 3};
        CHECK(optimal_stopping_time(out, a) == 0);
    }
    SUBCASE("bad path length") {
        const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(3, 1.0));
        const auto out = solve_snell(lat, make_problem("zero", "zero", "zero"));
        const std::vector<int> p{0, 1};
        CHECK_THROWS_AS(optimal_stopping_time(out, p), InvalidArgument);
    }
    SUBCASE("Monte Carlo replay of the stopping rule recovers Y_0") {
        const int n = 200;
        const double r = 0.06, dt = 1.0 / n;
        const auto lat = build_lattice(kPutModel, TimeGrid(n, 1.0));
        const auto spec = put_spec();
        const auto out = solve_snell(lat, spec);
        const auto res = oracle::replay(
            n, 10000, 4242, [&](int k, int j) { return lat.up_prob(k)[j]; },
            [&](const std::vector<int>& path) { return optimal_stopping_time(out, path); },
            [&](int tau, int j) {
                const double x = lat.state(tau, j);
                const double payoff = tau == n ? spec.g(x) : spec.h(lat.grid().time(tau), x);
                return payoff * std::pow(1.0 + r * dt, -tau);
            });
        CHECK(std::abs(res.mean - out.triple.y0()) <= 3.0 * res.std_error);
    }
}

TEST_CASE("brute force stopping value") {
    SUBCASE("constant instance") {
        const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(3, 1.0));
        CHECK(brute_force_stopping_value(lat, make_problem("zero", "constant:1", "zero")) == 1.0);
    }
    SUBCASE("f = 1 without obstacle") {
        const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(3, 1.0));
        CHECK(brute_force_stopping_value(lat, make_problem("constant:1", "zero", "constant:-1e9")) ==
              doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("h = x^+ on two steps") {
        const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(2, 1.0));
        const auto spec = make_problem("zero", "call_payoff:0", "call_payoff:0");
        CHECK(std::abs(brute_force_stopping_value(lat, spec) - solve_snell(lat, spec).triple.y0()) <= 1e-12);
    }
    SUBCASE("rejects large trees and (y, z) dependence") {
        const auto big = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(13, 1.0));
        CHECK_THROWS_AS(brute_force_stopping_value(big, make_problem("zero", "zero", "zero")), InvalidArgument);
        const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(3, 1.0));
        CHECK_THROWS_AS(brute_force_stopping_value(lat, make_problem("linear_discount:0.1", "zero", "zero")),
                        InvalidArgument);
    }
}

TEST_CASE("literal enumeration of stopping rules") {
    testing_support::InstanceGen gen(101);
    for (int trial = 0; trial < 25; ++trial) {
        auto inst = gen.time_only(4);
        const auto lat = build_lattice(inst.model, inst.grid);
        std::size_t rules = 0;
        const double best = oracle::enumerate_stopping_rules(tree_of(lat, inst.spec), &rules);
        const std::size_t expected[] = {1, 2, 5, 26, 677};
        CHECK(rules == expected[lat.n_steps()]);
        CHECK(std::abs(solve_snell(lat, inst.spec).triple.y0() - best) <= 1e-12 * std::max(1.0, std::abs(best)));
        CHECK(std::abs(brute_force_stopping_value(lat, inst.spec) - best) <= 1e-12 * std::max(1.0, std::abs(best)));
    }
}

TEST_CASE("Snell structure on random instances") {
    testing_support::InstanceGen gen(7);
    for (int trial = 0; trial < 30; ++trial) {
        auto pair = gen.ordered_pair(2, 40);
        const auto lat = build_lattice(pair.model, pair.grid);
        const auto out = solve_snell(lat, pair.lo);
        const auto rep = validate_solution(out.triple, pair.lo, lat);
        CHECK(rep.all_pass());
        CHECK(rep.skorokhod_residual <= 1e-12 * rep.scale);
        const int n = lat.n_steps();
        for (int k = 0; k <= n; ++k) {
            const double t = lat.grid().time(k);
            for (int j = 0; j <= k; ++j) {
                const double h = pair.lo.h(t, lat.state(k, j));
                const double y = out.triple.y[k][j];
                CHECK(y == std::max(h, out.continuation[k][j]));
                CHECK(out.continuation[k][j] <= y);
                if (out.triple.dk[k][j] > 0.0) CHECK(y == h);
                if (!out.exercise[k][j] && k < n) CHECK(out.continuation[k][j] == y);
            }
        }
        // Terminal labels: exercised iff g = h(T, x).
        for (int j = 0; j <= n; ++j) {
            const double x = lat.state(n, j);
            CHECK(static_cast<bool>(out.exercise[n][j]) ==
                  (std::abs(pair.lo.g(x) - pair.lo.h(lat.grid().time(n), x)) <= 1e-12));
        }
    }
}

TEST_CASE("comparison: raising g, f, h never lowers Y") {
    testing_support::InstanceGen gen(2024);
    for (int trial = 0; trial < 40; ++trial) {
        auto pair = gen.ordered_pair(2, 60);
        const auto lat = build_lattice(pair.model, pair.grid);
        const auto lo = solve_snell(lat, pair.lo).triple;
        const auto hi = solve_snell(lat, pair.hi).triple;
        double worst = 0.0;
        for (int k = 0; k <= lat.n_steps(); ++k) {
            for (int j = 0; j <= k; ++j) worst = std::max(worst, lo.y[k][j] - hi.y[k][j]);
        }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("no-obstacle reduction") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.1, 0.7, 0.3), TimeGrid(30, 1.0));
    const auto spec = make_problem("linear_discount:0.2", "identity", "constant:-1e9");
    const auto out = solve_snell(lat, spec);
    for (const auto& row : out.triple.dk) {
        for (double v : row) CHECK(v == 0.0);
    }
    CHECK(validate_solution(out.triple, spec, lat).all_pass());
    // Linear BSDE with g(x) = x: Y_0 = (x0 + b T) / (1 + r dt)^N.
    CHECK(out.triple.y0() == doctest::Approx((0.3 + 0.1) * std::pow(1.0 + 0.2 / 30, -30)).epsilon(1e-13));
}

TEST_CASE("contraction failure names the bound") {
    const auto lat = build_lattice(ForwardModel::arithmetic(0.0, 1.0, 0.0), TimeGrid(2, 1.0));
    try {
        (void)solve_snell(lat, make_problem("linear_discount:-3", "zero", "zero"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("kappa*dt < 1") != std::string::npos);
        CHECK(e.module() == "snell_solver");
    }
}
