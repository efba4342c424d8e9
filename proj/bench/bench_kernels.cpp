// Serial reference vs OpenMP path for each batch kernel.

#include <benchmark/benchmark.h>

#include <random>

#include "cicw/datagen.hpp"
#include "cicw/kernels.hpp"

using namespace cicw;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

void BM_BatchClassWeights(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.05, 5.0);
  const Eigen::Index n = state.range(1);
  Eigen::MatrixXd losses(n, 6);
  for (Eigen::Index i = 0; i < losses.size(); ++i) losses.data()[i] = u(rng);
  std::vector<std::size_t> labels(static_cast<std::size_t>(n));
  for (auto& y : labels) y = rng() % 6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_class_weights(ClassDivergence::kL2, losses, labels, 0.4, mode(state)));
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_PredictDataset(benchmark::State& state) {
  const NoisyDataset d = gaussian_blobs(4, static_cast<std::size_t>(state.range(1)), 3.0, 1.0, 2);
  const MLPParams p = MLPParams::initialize({4, 64, 64, 4}, OutputHead::kSoftmax, 3);
  for (auto _ : state) benchmark::DoNotOptimize(predict_dataset(p, d.features, mode(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_LevelsetGrid(benchmark::State& state) {
  std::vector<double> losses;
  for (int k = 1; k <= state.range(1); ++k) losses.push_back(4.9 * k / static_cast<double>(state.range(1)));
  const std::vector<DivergenceSpec> specs{DivergenceSpec::alpha_family(-1, 5), DivergenceSpec::kl(5),
                                          DivergenceSpec::alpha_family(0.5, 5), DivergenceSpec::alpha_family(2, 5)};
  for (auto _ : state) benchmark::DoNotOptimize(levelset_grid(specs, losses, 2.5, mode(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1) * 4);
}

void BM_DecisionGrid(benchmark::State& state) {
  const MLPParams p = MLPParams::initialize({2, 10, 20, 1}, OutputHead::kSigmoidBinary, 4);
  const auto resolution = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(decision_grid(p, GridBox{}, resolution, nullptr, mode(state)));
  state.SetItemsProcessed(state.iterations() * state.range(1) * state.range(1));
}

}  // namespace

// First argument: 0 = serial, 1 = parallel.
BENCHMARK(BM_BatchClassWeights)->ArgsProduct({{0, 1}, {1024, 16384}});
BENCHMARK(BM_PredictDataset)->ArgsProduct({{0, 1}, {4096, 65536}});
BENCHMARK(BM_LevelsetGrid)->ArgsProduct({{0, 1}, {1000, 20000}});
BENCHMARK(BM_DecisionGrid)->ArgsProduct({{0, 1}, {200, 800}});

BENCHMARK_MAIN();
