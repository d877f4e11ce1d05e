#include "lursync/graph.hpp"
#include "lursync/linalg.hpp"
#include "lursync/margin.hpp"
#include "lursync/nonlinearity.hpp"
#include "lursync/prl.hpp"
#include "lursync/simulator.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace lursync;

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

void BM_JacobiEig(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  const SymMatrix s(m);
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(s));
}
BENCHMARK(BM_JacobiEig)->Arg(8)->Arg(32)->Arg(64);

// Chua agent on a 4-ring with uncertain links.
void BM_ReducedCondition(benchmark::State& state) {
  const LureSystem sys = build_chua_network_system({}, 0.01, scalar(3.2), scalar(3.2), 0.295);
  const Matrix G = 0.1 * sys.C.transpose();
  const auto graph = torus_graph({4, 1, 1}, 1.0, 0.0).with_uniform_cod(static_cast<double>(state.range(0)));
  const auto spec = spectra(graph);
  SolverOptions opts;
  opts.max_iterations = 100000;
  for (auto _ : state) benchmark::DoNotOptimize(check_reduced_sync_condition(sys, G, spec, opts));
}
BENCHMARK(BM_ReducedCondition)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_TorusSweep(benchmark::State& state) {
  const ScalarTorusParams p{1.05, 8.0, 0.01, 1.0, 0.01};
  for (auto _ : state) benchmark::DoNotOptimize(torus_sweep(p, 50, 1, 25, 1, 10));
}
BENCHMARK(BM_TorusSweep)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  NetworkSimConfig cfg;
  cfg.topology = torus_graph({4, 1, 1}, 1.0, 0.5);
  cfg.system = build_chua_network_system({}, 0.01, scalar(3.2), scalar(3.2), 0.295);
  cfg.phi = Nonlinearity::chua({}).with_loop_shift(0.295);
  cfg.G = 0.1 * cfg.system.C.transpose();
  cfg.noise_model = NoiseModel::shifted_bernoulli;
  cfg.horizon = 2000;
  cfg.trials = 10;
  cfg.x0_spread = 0.01;
  cfg.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(cfg));
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
