#include "ahr/experiments.hpp"
#include "ahr/huber.hpp"
#include "ahr/markov.hpp"
#include "ahr/solver.hpp"

#include <benchmark/benchmark.h>

using namespace ahr;

namespace {

Dataset bench_dataset(std::size_t n, std::size_t d, double gamma) {
  SweepConfig cfg;
  cfg.d = d;
  cfg.s = 5;
  const Scenario scn = make_scenario(cfg, gamma, 1.0);
  return generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, n, 1);
}

void BM_LossGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset ds = bench_dataset(n, 200, 0.5);
  const Vector beta = Vector::Constant(200, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(loss_gradient(beta, ds.problem, 3.0));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * 200));
}
BENCHMARK(BM_LossGradient)->Arg(1000)->Arg(4000)->Arg(20000);

void BM_FitAdaptive(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset ds = bench_dataset(n, 200, 0.5);
  const AdaptiveSpec spec{n, 200, 1.0, 0.5, 1.0, 1.0};
  const HuberConfig cfg{select_tau(spec), select_lambda(spec)};
  int iters = 0;
  for (auto _ : state) {
    const SolverResult r = fit(ds.problem, cfg);
    iters = r.iterations;
    benchmark::DoNotOptimize(r.objective);
  }
  state.counters["iterations"] = iters;
}
BENCHMARK(BM_FitAdaptive)->Arg(250)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_FitAcceleration(benchmark::State& state) {
  const Dataset ds = bench_dataset(2000, 200, 0.5);
  SolverConfig scfg;
  scfg.acceleration = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(fit(ds.problem, {2.0, 0.02}, scfg).objective);
}
BENCHMARK(BM_FitAcceleration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SimulateChain(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const ChainSpec chain = make_chain_with_gamma(m, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_chain(chain, 100000, 3));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 100000));
}
BENCHMARK(BM_SimulateChain)->Arg(2)->Arg(1000);

void BM_GenerateDataset(benchmark::State& state) {
  SweepConfig cfg;
  const Scenario scn = make_scenario(cfg, 0.5, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_dataset(scn.chain, scn.covariates, scn.errors, scn.truth, 4000, 9).problem.y());
  }
}
BENCHMARK(BM_GenerateDataset)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
