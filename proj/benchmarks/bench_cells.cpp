#include <benchmark/benchmark.h>

#include "oscidiff/cellsolve.hpp"
#include "oscidiff/effmat.hpp"

using namespace oscidiff;

static void BM_SubcriticalCell1D(benchmark::State& state) {
  const auto f = builtin::trig1d_mixed();
  const CellGrid g{1, static_cast<int>(state.range(0)), 64};
  for (auto _ : state) benchmark::DoNotOptimize(solve_subcritical_cell(f, g, 0));
}
BENCHMARK(BM_SubcriticalCell1D)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_ClassicalCell2D(benchmark::State& state) {
  const auto f = builtin::checkerboard2d();
  const CellGrid g{2, static_cast<int>(state.range(0)), 2};
  for (auto _ : state) benchmark::DoNotOptimize(solve_classical_cell(f, g, 0));
}
BENCHMARK(BM_ClassicalCell2D)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_TimePeriodicCell2D(benchmark::State& state) {
  const auto f = builtin::trig2d();
  const CellGrid g{2, static_cast<int>(state.range(0)), 16};
  for (auto _ : state) benchmark::DoNotOptimize(solve_time_periodic_cell(f, g, 0.7, 0));
}
BENCHMARK(BM_TimePeriodicCell2D)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_CriticalTable1D(benchmark::State& state) {
  const auto f = builtin::trig1d_mixed();
  const CellGrid g{1, 64, 64};
  for (auto _ : state) benchmark::DoNotOptimize(tabulate_ahom_critical(f, g, 1.5, default_u0abs_grid()));
}
BENCHMARK(BM_CriticalTable1D)->Unit(benchmark::kMillisecond);
