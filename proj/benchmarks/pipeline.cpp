#include <benchmark/benchmark.h>

#include "ccseg/datakit.hpp"
#include "ccseg/image_io.hpp"
#include "ccseg/pipeline.hpp"

namespace {

using namespace ccseg;

void BM_InferFrame(benchmark::State& state) {
  pipeline::VariantSpec spec;
  spec.insertion = pipeline::kAllInsertions[static_cast<std::size_t>(state.range(0))];
  const auto side = static_cast<std::size_t>(state.range(1));
  const pipeline::SegmentationModel model(spec, pipeline::init_weights(spec, 1));
  data::SynthOptions so;
  so.stage = data::Stage::kStage1;
  so.width = so.height = side;
  const Tensor image = image_to_tensor(data::synth_frame(so, 0).image);
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::infer_frame(image, model));
  state.SetLabel(spec.name());
}
BENCHMARK(BM_InferFrame)
    ->ArgsProduct({{0, 1, 2, 3}, {128, 256}})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
