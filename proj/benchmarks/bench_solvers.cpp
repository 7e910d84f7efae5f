#include <benchmark/benchmark.h>

#include <random>

#include "nlaid/engine.hpp"
#include "nlaid/harness.hpp"

namespace {

using namespace nlaid;

SampleMatrix random_rows(Eigen::Index n, Eigen::Index d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(-0.05, 0.02);
  SampleMatrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = g(rng);
  }
  return m;
}

void BM_SolveLocalCold(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const SampleMatrix data = random_rows(n, 4, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_standalone(data, 0.95, 1e-6));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveLocalCold)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

// What each ADMM node update costs once the dual has settled.
void BM_SolveLocalWarmProx(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const SampleMatrix data = random_rows(n, 4, 11);
  const LossConfig loss{0.95, static_cast<std::size_t>(n)};
  const std::vector<ProxTerm> prox{{Vector::Constant(4, -0.5), 1.0}, {Vector::Constant(4, -0.4), 1.0}};
  DualState dual;
  solve_local(data, loss, prox, {1e-6, 0}, &dual);
  for (auto _ : state) {
    DualState warm = dual;
    benchmark::DoNotOptimize(solve_local(data, loss, prox, {1e-6, 0}, &warm));
  }
}
BENCHMARK(BM_SolveLocalWarmProx)->Arg(2112)->Arg(8448);

void BM_ZUpdate(benchmark::State& state) {
  const Vector p = Vector::Constant(4, 0.3);
  const Vector q = Vector::Constant(4, -0.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(z_update_edge(p, q, 0.7, 1.0));
  }
}
BENCHMARK(BM_ZUpdate);

// Full cold ADMM solve on the default 24-region scenario.
void BM_AdmmDefaultScenario(benchmark::State& state) {
  const auto cfg = default_experiment_config();
  const auto data = prepare_data(cfg, derive_seed(cfg.seed, 0));
  const auto graph = build_graph(data, cfg.graph_variant, cfg.graph);
  const auto problem = make_problem(data, graph, cfg.nu);
  SolverConfig solver = cfg.solver;
  solver.lambda = static_cast<double>(state.range(0)) / 10.0;
  int iterations = 0;
  for (auto _ : state) {
    const auto sol = admm_solve(problem, solver);
    iterations = sol.trace.iterations();
    benchmark::DoNotOptimize(sol.models.data());
  }
  state.counters["iterations"] = iterations;
}
BENCHMARK(BM_AdmmDefaultScenario)->Arg(1)->Arg(3)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
