#include <benchmark/benchmark.h>

#include "ccseg/ccam.hpp"
#include "ccseg/metrics.hpp"
#include "ccseg/tensor.hpp"
#include "ccseg/verify/oracles.hpp"

namespace {

using namespace ccseg;

void BM_Conv3x3(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor x = verify::random_tensor({c, side, side}, rng);
  const Tensor k = verify::random_tensor({c, c, 3, 3}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k, {}, 1, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 9 * side * side));
}
BENCHMARK(BM_Conv3x3)->Args({16, 64})->Args({32, 32})->Args({64, 16});

void BM_RccaForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const attention::AttentionConfig cfg{32, 8, 2, true};
  Rng rng(2);
  const auto w = attention::random_weights(cfg, rng);
  const Tensor x = verify::random_tensor({32, side, side}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(attention::rcca_forward(x, w, cfg));
  state.counters["entries"] = static_cast<double>(attention::affinity_entry_count(side, side));
}
BENCHMARK(BM_RccaForward)->RangeMultiplier(2)->Range(8, 64);

void BM_DenseAttentionOracle(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const attention::AttentionConfig cfg{32, 8, 2, true};
  Rng rng(2);
  const auto w = attention::random_weights(cfg, rng);
  const Tensor x = verify::random_tensor({32, side, side}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(verify::dense_attention(x, w, cfg));
}
BENCHMARK(BM_DenseAttentionOracle)->RangeMultiplier(2)->Range(8, 16);

void BM_DistanceTransform(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  BinaryMask m(side, side);
  for (int i = 0; i < 8; ++i) m.at(rng.uniform_index(side), rng.uniform_index(side)) = 1;
  for (auto _ : state) benchmark::DoNotOptimize(metrics::distance_transform(m));
}
BENCHMARK(BM_DistanceTransform)->Arg(64)->Arg(256);

void BM_FrameScores(benchmark::State& state) {
  Rng rng(4);
  const auto gt = verify::random_labels(256, 256, static_cast<std::size_t>(state.range(0)), rng);
  const auto pred = verify::perturb_labels(gt, rng);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::frame_scores(gt, pred));
}
BENCHMARK(BM_FrameScores)->Arg(2)->Arg(6);

}  // namespace
