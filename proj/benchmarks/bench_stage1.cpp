#include <benchmark/benchmark.h>

#include "nightwatch/stage1.hpp"
#include "nightwatch/synth.hpp"

using namespace nightwatch;

// Full-frame spike extraction at the deployed kernel parameters; the frame is
// the default synthetic scene scaled to the benchmark size.
static void BM_DetectLightSources(benchmark::State& state) {
  SceneSpec spec = default_low_lat_scene(11);
  spec.width = spec.height = static_cast<int>(state.range(0));
  if (spec.width <= 512) {
    spec.streaks.clear();
    spec.clouds.reset();
    spec.flare_sites.clear();
    spec.vessel_count = 10;
    spec.placement_margin_px = 80;
  }
  auto [frame, truth] = generate_frame(spec);
  Stage1Params params;
  params.prominence_threshold = 6.0 * spec.background_noise_sigma_nw;
  for (auto _ : state) {
    const auto candidates = detect_light_sources(frame, params);
    benchmark::DoNotOptimize(candidates.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(spec.width) * spec.height);
}
BENCHMARK(BM_DetectLightSources)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
