#include <benchmark/benchmark.h>

#include <random>

#include "invreg/diagnostics.hpp"
#include "invreg/dynamics.hpp"
#include "invreg/integrate.hpp"
#include "invreg/linalg.hpp"
#include "invreg/scenarios.hpp"

namespace {

using namespace invreg;

Matrix random_spd(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = u(rng);
  }
  return m.transpose() * m + Matrix::identity(d);
}

void BM_SpdSolve(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_spd(d, 1);
  const Matrix b = Matrix::identity(d);
  for (auto _ : state) benchmark::DoNotOptimize(spd_solve(a, b));
}
BENCHMARK(BM_SpdSolve)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_SymMinEig(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_spd(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sym_min_eig(a));
}
BENCHMARK(BM_SymMinEig)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_ClosedLoopRhs(benchmark::State& state, const char* name) {
  const Scenario sc = builtin(name);
  for (auto _ : state) benchmark::DoNotOptimize(closed_loop_rhs(sc.models, sc.mode, sc.s0));
}
BENCHMARK_CAPTURE(BM_ClosedLoopRhs, scalar, "scalar-equilibrium");
BENCHMARK_CAPTURE(BM_ClosedLoopRhs, hopf, "hopf-circle");
BENCHMARK_CAPTURE(BM_ClosedLoopRhs, hopf_kappa_zero, "hopf-circle-kappa-zero");

void BM_Integrate(benchmark::State& state, const char* name, bool adaptive) {
  ScenarioSpec spec = builtin_spec(name);
  spec.integration.t_end = 10.0;
  spec.integration.adaptive = adaptive;
  spec.integration.log_stride = 100;
  const Scenario sc = build(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate(sc.models, sc.mode, sc.s0, sc.integration));
  }
}
BENCHMARK_CAPTURE(BM_Integrate, hopf_fixed, "hopf-circle", false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Integrate, hopf_adaptive, "hopf-circle", true)->Unit(benchmark::kMillisecond);

void BM_Report(benchmark::State& state) {
  ScenarioSpec spec = builtin_spec("hopf-circle-drift");
  spec.integration.t_end = 40.0;
  const Scenario sc = build(spec);
  const Trajectory traj = integrate(sc.models, sc.mode, sc.s0, sc.integration);
  for (auto _ : state) benchmark::DoNotOptimize(report(traj, sc.models, sc.mode, sc.diagnostics));
}
BENCHMARK(BM_Report)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
