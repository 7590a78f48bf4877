#include <benchmark/benchmark.h>

#include "oscidiff/pdesolve.hpp"

using namespace oscidiff;

static MicroProblem micro(const PeriodicMatrixField& f, int dim, int nx, int nt, double p) {
  MicroProblem mp;
  mp.field = &f;
  mp.eps = 0.125;
  mp.p = p;
  mp.data = make_data(dim, "sine", "one");
  mp.grid = MacroGrid{dim, nx, nt, 0.25};
  return mp;
}

// 16 backward-Euler steps per iteration; time per step = reported / 16
static void BM_MicroSteps1D(benchmark::State& state) {
  const auto f = builtin::trig1d_mixed();
  const auto mp = micro(f, 1, static_cast<int>(state.range(0)), 16, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_micro(mp));
}
BENCHMARK(BM_MicroSteps1D)->Arg(255)->Arg(1023)->Unit(benchmark::kMillisecond);

static void BM_MicroSteps2D(benchmark::State& state) {
  const auto f = builtin::trig2d();
  const auto mp = micro(f, 2, static_cast<int>(state.range(0)), 16, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_micro(mp));
}
BENCHMARK(BM_MicroSteps2D)->Arg(31)->Arg(63)->Unit(benchmark::kMillisecond);

static void BM_HMinus1Norm2D(benchmark::State& state) {
  const MacroGrid g{2, static_cast<int>(state.range(0)), 1, 1.0};
  const HMinus1 hm(g);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(g.nx * g.nx);
  for (auto _ : state) benchmark::DoNotOptimize(hm.of_function(w));
}
BENCHMARK(BM_HMinus1Norm2D)->Arg(63)->Arg(127)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
