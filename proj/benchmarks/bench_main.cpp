#include <benchmark/benchmark.h>

#include <map>

#include "hsclean/datacube.hpp"
#include "hsclean/experiment.hpp"
#include "hsclean/noisegen.hpp"
#include "hsclean/propagation.hpp"
#include "hsclean/rlpa.hpp"
#include "hsclean/segmentation.hpp"
#include "hsclean/ssgraph.hpp"

using namespace hsclean;

namespace {

// Square synthetic scene with every pixel labeled and 30% label noise.
struct Scene {
  SynthResult synth;
  SuperpixelMap map;
  SampleSet samples;
  TransitionMatrix t;
  LabelMatrix noisy;

  explicit Scene(std::size_t side) {
    SynthSource src;
    src.height = side;
    src.width = side;
    src.separation = 0.5;
    synth = synth_cube(make_line_synth_spec(src), 1);
    SegmentationParams seg;
    seg.t_base = 200;
    map = segment_cube(synth.cube, seg);
    const auto pixels = synth.labels.labeled_pixels();
    samples = SampleSet::from_cube(synth.cube, pixels);
    t = build_transition(build_affinity(samples, map));
    noisy = apply_label_noise(to_onehot(synth.labels, pixels), {0.3, 2});
  }
};

const Scene& scene(std::size_t side) {
  static std::map<std::size_t, Scene> cache;
  auto it = cache.find(side);
  if (it == cache.end()) it = cache.emplace(side, Scene(side)).first;
  return it->second;
}

void BM_Segment(benchmark::State& state) {
  const auto& s = scene(static_cast<std::size_t>(state.range(0)));
  SegmentationParams seg;
  seg.t_base = 200;
  for (auto _ : state) benchmark::DoNotOptimize(segment_cube(s.synth.cube, seg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.synth.cube.pixel_count()));
}

void BM_BuildAffinity(benchmark::State& state) {
  const auto& s = scene(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_affinity(s.samples, s.map));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.samples.size()));
}

void BM_PropagateClosed(benchmark::State& state) {
  const auto& s = scene(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(propagate_closed(s.t, s.noisy, 0.9));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.samples.size()));
}

void BM_RlpaCleanse(benchmark::State& state) {
  const auto& s = scene(static_cast<std::size_t>(state.range(0)));
  RlpaConfig cfg;
  cfg.threads = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(rlpa_cleanse(s.t, s.noisy, cfg));
}

}  // namespace

BENCHMARK(BM_Segment)->Arg(60)->Arg(145)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildAffinity)->Arg(60)->Arg(145)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PropagateClosed)->Arg(60)->Arg(145)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RlpaCleanse)->Args({60, 1})->Args({60, 0})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
