#include <benchmark/benchmark.h>

#include <hetsca/hetsca.hpp>

using namespace hetsca;

namespace {

ChannelSet instance(int cells, int bs, int users, Scenario scenario) {
  NetworkConfig cfg = NetworkConfig::uniform(cells, bs, users, 4, 2, 1);
  cfg.scenario = scenario;
  cfg.rng_seed = 1;
  return generate_instance(cfg);
}

void BM_BuildSurrogate(benchmark::State& state) {
  const auto ch = instance(static_cast<int>(state.range(0)), 3, 4, Scenario::CompFull);
  const auto v = initialize(ch, InitPolicy::ScaledRandom, 0);
  const std::vector<double> beta(ch.num_cells(), 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(build_surrogate(ch, v, beta));
}
BENCHMARK(BM_BuildSurrogate)->Arg(1)->Arg(2)->Arg(3);

void BM_CompSinglePass(benchmark::State& state) {
  const auto ch = instance(2, 3, 4, Scenario::CompSparse);
  const auto v = initialize(ch, InitPolicy::ScaledRandom, 0);
  const auto model = build_surrogate(ch, v, {1e-3, 1e-3});
  const auto gamma = uniform_block_weights(ch, state.range(0) ? 0.1 : 0.0);
  const auto serving = ServingPattern::full(ch);
  for (auto _ : state) {
    PrecoderSet next = v;
    benchmark::DoNotOptimize(comp_single_pass(model, ch, 0, next, serving, gamma));
  }
}
BENCHMARK(BM_CompSinglePass)->Arg(0)->Arg(1);

void BM_Run(benchmark::State& state) {
  const auto ch = instance(2, 3, 2, Scenario::CompFull);
  RunSettings s;
  s.algorithm = state.range(0) ? Algorithm::InSca : Algorithm::Sca;
  s.stationarity_directions = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run(ch, s));
}
BENCHMARK(BM_Run)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
