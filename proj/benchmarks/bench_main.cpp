#include <benchmark/benchmark.h>

#include <memory>

#include "betagas/equilibrium.hpp"
#include "betagas/kernel.hpp"
#include "betagas/potential.hpp"
#include "betagas/sampler.hpp"

using namespace betagas;

namespace {

std::shared_ptr<const Potential> quadratic() {
  return std::make_shared<Potential>(Potential::polynomial(Domain::interval(-4.0, 4.0), {0.0, 0.0, 1.0}));
}

void BM_Sweep(benchmark::State& state) {
  ChainConfig c;
  c.n = static_cast<std::size_t>(state.range(0));
  c.beta = 2.0;
  c.potential = quadratic();
  c.neighborhood = {{-1.6, 1.6}};
  c.c0 = 2.5;
  c.epsilon = 0.25;
  c.jump_rate = static_cast<double>(c.n);
  c.affine_moves = true;
  c.seed = 1;
  const ChainKernel kernel(c);
  EnsembleState s = kernel.initial_state();
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(mcmc_sweep(s, kernel, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sweep)->RangeMultiplier(4)->Range(32, 512)->Unit(benchmark::kMicrosecond);

void BM_Equilibrium(benchmark::State& state) {
  const auto v = quadratic();
  GridConfig g;
  g.nodes = static_cast<std::size_t>(state.range(0));
  g.tolerance = 1e-10;
  for (auto _ : state) benchmark::DoNotOptimize(solve_equilibrium(*v, v->domain(), g));
}
BENCHMARK(BM_Equilibrium)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_LogField(benchmark::State& state) {
  const auto v = quadratic();
  GridConfig g;
  g.nodes = static_cast<std::size_t>(state.range(0));
  const auto sol = solve_equilibrium(*v, v->domain(), g);
  double x = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_field(sol.measure, x));
    x = x == 2.0 ? 2.5 : 2.0;
  }
}
BENCHMARK(BM_LogField)->Arg(512)->Arg(2048);

void BM_Tridiagonal(benchmark::State& state) {
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(tridiagonal_sample(static_cast<std::size_t>(state.range(0)), 2.0, rng));
}
BENCHMARK(BM_Tridiagonal)->RangeMultiplier(4)->Range(16, 1024)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
