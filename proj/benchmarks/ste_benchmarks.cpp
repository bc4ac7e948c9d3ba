#include <benchmark/benchmark.h>

#include "ste/belief.hpp"
#include "ste/dqn.hpp"
#include "ste/env.hpp"
#include "ste/planners.hpp"

using namespace ste;

namespace {

const SourceTerm kSource{18, 16, 300, 2.0, 0.8, 4.0, 10.0};

Belief warmed_belief(std::size_t n, int steps) {
  BeliefConfig cfg;
  cfg.n_particles = n;
  EnvConfig env;
  Rng rng(1);
  Belief b = init_prior(cfg, kSource, rng);
  Position p{2, 2};
  for (int k = 0; k < steps; ++k) {
    const StepResult s = step(p, k % 2 ? Action::North : Action::East, env, kSource, rng);
    p = s.position;
    b = update(std::move(b), s.observation, cfg, env, rng);
  }
  return b;
}

void BM_PlumeKernel(benchmark::State& state) {
  const PlumeKernel k(kSource);
  Position p{3, 4};
  for (auto _ : state) {
    benchmark::DoNotOptimize(k.at(p));
    p.x += 1e-9;
  }
}
BENCHMARK(BM_PlumeKernel);

void BM_BeliefUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  BeliefConfig cfg;
  cfg.n_particles = n;
  cfg.resample_fraction = 1e-9;  // never resamples: reweighting cost only
  EnvConfig env;
  Rng rng(2);
  const Belief b0 = init_prior(cfg, kSource, rng);
  for (auto _ : state) {
    Belief b = update(b0, {{5, 5}, 0.7}, cfg, env, rng);
    benchmark::DoNotOptimize(b);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_BeliefUpdate)->Arg(100)->Arg(1000)->Arg(4000);

void BM_Resample(benchmark::State& state) {
  const Belief b0 = warmed_belief(static_cast<std::size_t>(state.range(0)), 40);
  BeliefConfig cfg;
  cfg.n_particles = b0.particles().size();
  EnvConfig env;
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(resample(b0, cfg, env, rng));
}
BENCHMARK(BM_Resample)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SelectAction(benchmark::State& state) {
  const Belief b = warmed_belief(1000, 20);
  const auto kind = static_cast<PlannerKind>(state.range(0));
  LookaheadConfig look;
  EnvConfig env;
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(select_action(kind, b, {10, 10}, look, env, rng));
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_SelectAction)
    ->Arg(static_cast<int>(PlannerKind::Infotaxis))
    ->Arg(static_cast<int>(PlannerKind::Entrotaxis))
    ->Arg(static_cast<int>(PlannerKind::Dcee))
    ->Unit(benchmark::kMillisecond);

void BM_TdUpdate(benchmark::State& state) {
  Rng rng(5);
  QNetwork net = QNetwork::glorot({kFeatureCount, 128, 128, 128, 4}, rng);
  const QNetwork target = net;
  std::vector<Transition> batch(64);
  for (Transition& t : batch) {
    for (double& f : t.features) f = uniform(rng, 0, 1);
    for (double& f : t.next_features) f = uniform(rng, 0, 1);
  }
  LearnerConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(td_update(net, target, batch, cfg));
}
BENCHMARK(BM_TdUpdate)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
