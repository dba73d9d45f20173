#include "puck/analysis.hpp"
#include "puck/core.hpp"
#include "puck/estimation.hpp"

#include <benchmark/benchmark.h>

using namespace puck;

namespace {

TickSeries quadratic_series(std::size_t n) {
    SimulationConfig cfg;
    cfg.model = PotentialModel{0.5, 2, 0.0, 4, 0.03};
    cfg.noise = NoiseModel{NoiseKind::gaussian, 0.03, 0.0};
    cfg.n_steps = n;
    cfg.initial_prices.assign(4, 100.0);
    cfg.rng_seed = 1;
    return simulate(cfg);
}

void BM_Simulate(benchmark::State& state) {
    SimulationConfig cfg;
    cfg.model = PotentialModel{0.6, 2, -0.3, 4, 0.3};
    cfg.noise = NoiseModel{NoiseKind::gaussian, 0.3, 0.0};
    cfg.n_steps = static_cast<std::size_t>(state.range(0));
    cfg.initial_prices.assign(4, 100.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(cfg));
        ++cfg.rng_seed;
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(2000)->Arg(100000);

void BM_SelectModelDefaultGrid(benchmark::State& state) {
    const auto s = quadratic_series(static_cast<std::size_t>(state.range(0)) - 4);
    for (auto _ : state) benchmark::DoNotOptimize(select_model(s, GridSpec{}, Criterion::aic));
}
BENCHMARK(BM_SelectModelDefaultGrid)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SelectModelStudentT(benchmark::State& state) {
    const auto s = quadratic_series(1996);
    GridSpec g;
    g.b_quad = Range{0.0, 1.0, 0.1};
    g.b_nl = Range{-0.4, 0.4, 0.1};
    g.m_set = {3, 4, 5};
    FitOptions opt;
    opt.noise = NoiseKind::student_t;
    for (auto _ : state) benchmark::DoNotOptimize(select_model(s, g, Criterion::aic, opt));
}
BENCHMARK(BM_SelectModelStudentT)->Unit(benchmark::kMillisecond);

void BM_StabilityBoundaries(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(stability_boundaries(m));
}
BENCHMARK(BM_StabilityBoundaries)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_EmpiricalPotential(benchmark::State& state) {
    const auto s = quadratic_series(100000);
    for (auto _ : state) benchmark::DoNotOptimize(empirical_potential(s, 4, 31));
}
BENCHMARK(BM_EmpiricalPotential);

}  // namespace

BENCHMARK_MAIN();
