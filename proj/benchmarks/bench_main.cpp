#include <benchmark/benchmark.h>

#include "rwlab/coarse.hpp"
#include "rwlab/estimators.hpp"
#include "rwlab/perco.hpp"
#include "rwlab/walk.hpp"

using namespace rwlab;

static void BM_StepperDraw(benchmark::State& state) {
  Stepper st(3, static_cast<double>(state.range(0)) / 10.0);
  Rng rng(1);
  Site s;
  for (auto _ : state) {
    Stepper::apply(s, st.draw(rng));
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StepperDraw)->Arg(0)->Arg(5);

static void BM_FieldValue(benchmark::State& state) {
  const EnvironmentField env(3, PotentialDistribution::pareto(0.7, 1.0), 3);
  Site s;
  for (auto _ : state) {
    ++s[0];
    benchmark::DoNotOptimize(env.value_at(s));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FieldValue);

static void BM_AnnealedCost(benchmark::State& state) {
  const auto mu = PotentialDistribution::pareto(0.7, 1.0);
  const auto cfg = with_default_tilt({3, 0.0, 0}, mu, 0.03);
  SamplingOptions opt;
  opt.replicas = 1000;
  const auto n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(annealed_cost(mu, 0.03, n, cfg, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opt.replicas));
}
BENCHMARK(BM_AnnealedCost)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_QuenchedCost(benchmark::State& state) {
  const auto mu = PotentialDistribution::pareto(0.7, 1.0);
  const EnvironmentField env(5, mu, 3);
  const auto cfg = with_default_tilt({3, 0.0, 0}, mu, 0.03);
  SamplingOptions opt;
  opt.replicas = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(quenched_cost(env, 0.03, 20, cfg, opt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opt.replicas));
}
BENCHMARK(BM_QuenchedCost)->Unit(benchmark::kMillisecond);

static void BM_ExactPassage(benchmark::State& state) {
  const EnvironmentField env(5, PotentialDistribution::pareto(0.7, 1.0), 3);
  Box box = Box::cube(3, static_cast<std::int32_t>(state.range(0)));
  box.hi[0] = 6;
  for (auto _ : state) benchmark::DoNotOptimize(exact_passage(env, 0.5, 6, box, 1e-10));
}
BENCHMARK(BM_ExactPassage)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_Certify(benchmark::State& state) {
  const EnvironmentField env(5, PotentialDistribution::pareto(0.7, 1.0), 3);
  GoodnessParams g;
  g.d = 3;
  g.eps = 0.2;
  g.lambda = 0.01;
  g.L = 40.0;
  g.delta1 = 0.1;
  const auto classified = classify(partition(g.eps, g.lambda), env.law(), g.L);
  const Box region = Box::cube(3, static_cast<std::int32_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(certify_region(env, region, g, classified, GoodnessMode::kCase1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(region.volume()));
}
BENCHMARK(BM_Certify)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_DirectedPath(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto grid = random_grid(n, n / 5, 0.9, 1);
  for (auto _ : state) benchmark::DoNotOptimize(directed_path(grid));
}
BENCHMARK(BM_DirectedPath)->Arg(200)->Arg(2000);

static void BM_VisitHistogram(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(
        visit_histogram(Site::of({3, 4, 0}), 20.0, 3, 2000, 1, VisitSampling::kRestart));
}
BENCHMARK(BM_VisitHistogram)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
