#include <benchmark/benchmark.h>

#include <limits>
#include <random>

#include "portirl/data_pipeline.hpp"
#include "portirl/lstm_ae.hpp"
#include "portirl/maxent_irl.hpp"
#include "portirl/synthetic_expert.hpp"
#include "portirl/toy_mdp.hpp"

using namespace portirl;

namespace {

std::vector<double> random_theta(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

ToyMdpConfig toy_config(int size) {
  return size == 0 ? ToyMdpConfig{} : ToyMdpConfig{3, 3, 2, 2, 0.3};
}

const SyntheticDataset& synthetic() {
  static const SyntheticDataset ds = [] {
    SyntheticConfig c;
    c.horizon = 1000;
    return generate_dataset(c);
  }();
  return ds;
}

}  // namespace

static void BM_SoftValueIteration(benchmark::State& state) {
  const auto toy = enumerate_toy_mdp(toy_config(static_cast<int>(state.range(0))));
  const auto theta = random_theta(static_cast<std::size_t>(toy.tabular.feature_dim), 1);
  const IrlConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(soft_value_iteration(toy.tabular, theta, cfg));
  state.counters["states"] = static_cast<double>(toy.states.size());
}
BENCHMARK(BM_SoftValueIteration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_ExactGradient(benchmark::State& state) {
  const auto toy = enumerate_toy_mdp({});
  const auto theta = random_theta(static_cast<std::size_t>(toy.tabular.feature_dim), 2);
  const IrlConfig cfg;
  const auto data = sample_demonstrations(toy.tabular, soft_value_iteration(toy.tabular, theta, cfg), 2000, 3);
  for (auto _ : state) benchmark::DoNotOptimize(grad_log_likelihood(toy.tabular, data, theta, cfg));
}
BENCHMARK(BM_ExactGradient)->Unit(benchmark::kMillisecond);

static void BM_FactoredGradient(benchmark::State& state) {
  const auto& ds = synthetic();
  const std::vector<Trajectory> trajs{infer_actions(ds.timeline.states, 0)};
  const SlotContextBuilder builder(ds.registry, FeatureScaling::from_registry(ds.registry), 0);
  const auto data = build_factored_dataset(trajs, builder, {}, std::numeric_limits<WindowIndex>::min(),
                                           std::numeric_limits<WindowIndex>::max());
  auto params = state.range(0) == 0 ? RewardParams::linear(builder.dimension())
                                    : RewardParams::mlp(builder.dimension(), 32, 4);
  for (auto _ : state) benchmark::DoNotOptimize(grad_log_likelihood(data, params));
  state.counters["decisions"] = static_cast<double>(data.decisions.size());
}
BENCHMARK(BM_FactoredGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_LstmSequenceGradient(benchmark::State& state) {
  const auto& ds = synthetic();
  const LstmAeConfig cfg;
  const auto scaling = FeatureScaling::from_registry(ds.registry, cfg.staytime_cap);
  const auto samples = make_sequences({infer_actions(ds.timeline.states, 0)}, ds.registry, cfg, scaling,
                                      std::numeric_limits<WindowIndex>::max());
  const auto params = LstmAeParams::random(cfg, scaling, 5);
  const LstmAeLayout l = params.layout();
  std::vector<double> grad(l.total);
  const auto weights = LossWeights::defaults();
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    benchmark::DoNotOptimize(
        sequence_loss<double>(l, params.values, samples.front(), weights, cfg.reconstruction_weight, grad));
  }
}
BENCHMARK(BM_LstmSequenceGradient)->Unit(benchmark::kMicrosecond);

static void BM_SyntheticPort(benchmark::State& state) {
  SyntheticConfig c;
  c.horizon = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generate_dataset(c));
}
BENCHMARK(BM_SyntheticPort)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
