#include <benchmark/benchmark.h>

#include "rbsde/pde.hpp"
#include "rbsde/penalty.hpp"
#include "rbsde/snell.hpp"

using namespace rbsde;

namespace {

const ForwardModel kPut = ForwardModel::geometric(0.06, 0.4, 36.0);
ProblemSpec put_spec() { return make_problem("linear_discount:0.06", "put_payoff:40", "put_payoff:40"); }

void BM_Snell(benchmark::State& state) {
    const auto lat = build_lattice(kPut, TimeGrid(static_cast<int>(state.range(0)), 1.0));
    const auto spec = put_spec();
    for (auto _ : state) benchmark::DoNotOptimize(solve_snell(lat, spec).triple.y0());
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Snell)->RangeMultiplier(2)->Range(128, 2048)->Unit(benchmark::kMillisecond)->Complexity();

void BM_Penalized(benchmark::State& state) {
    const auto lat = build_lattice(kPut, TimeGrid(512, 1.0));
    const auto spec = put_spec();
    for (auto _ : state) benchmark::DoNotOptimize(solve_penalized(lat, spec, static_cast<double>(state.range(0))).y0());
}
BENCHMARK(BM_Penalized)->Arg(1)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
    const auto lat = build_lattice(kPut, TimeGrid(512, 1.0));
    const auto spec = put_spec();
    SweepOptions opts;
    opts.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep(lat, spec, default_schedule(), opts).y0.back());
}
BENCHMARK(BM_Sweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PdeProjected(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const PdeGrid grid{0.0, 160.0, m, TimeGrid(m - 1, 1.0)};
    const auto spec = put_spec();
    for (auto _ : state) benchmark::DoNotOptimize(solve_pde_projected(grid, spec, kPut).value_at(0.0, 36.0));
}
BENCHMARK(BM_PdeProjected)->Arg(101)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_ChiScan(benchmark::State& state) {
    const PdeGrid grid{-100.0, 100.0, 401, TimeGrid(100, 1.0)};
    const auto gbm = ForwardModel::geometric(0.06, 0.4, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(chi_supersolution_check(ChiParams{1.0, 1.0, 1.0}, gbm, 1.0, grid).passed);
}
BENCHMARK(BM_ChiScan)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
