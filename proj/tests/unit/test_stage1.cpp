#include <doctest.h>

#include <cmath>
#include <set>

#include "nightwatch/errors.hpp"
#include "nightwatch/rng.hpp"
#include "nightwatch/stage1.hpp"
#include "nightwatch/synth.hpp"
#include "oracles/test_support.hpp"

using namespace nightwatch;

namespace {

Stage1Params default_params(double threshold = 10.0) {
  Stage1Params p;
  p.prominence_threshold = threshold;
  return p;
}

void set_px(RasterFrame& frame, int r, int c, float v) {
  frame.planes[0][static_cast<size_t>(r) * frame.width + c] = v;
}

// Quantized noise keeps every value exactly representable so the offset and
// scale properties can be asserted bitwise.
RasterFrame quantized_noise_frame(int size, uint64_t seed) {
  RasterFrame frame = testsup::flat_frame(size, size, 0.0f);
  Rng rng(seed);
  for (auto& v : frame.planes[0]) v = static_cast<float>(rng.next_below(64)) * 0.25f;
  return frame;
}

}  // namespace

TEST_CASE("stage1: constant frames yield no candidates") {
  for (float level : {0.0f, 5.0f, 123.0f}) {
    const RasterFrame frame = testsup::flat_frame(64, 64, level);
    CHECK(detect_light_sources(frame, default_params(0.0)).empty());
  }
}

TEST_CASE("stage1: single spike on zero background") {
  RasterFrame frame = testsup::flat_frame(101, 101, 0.0f);
  set_px(frame, 50, 50, 100.0f);
  const auto candidates = detect_light_sources(frame, default_params(10.0));
  REQUIRE(candidates.size() == 1);
  CHECK(candidates[0].row == 50);
  CHECK(candidates[0].col == 50);
  CHECK(candidates[0].peak_radiance == 100.0f);
  CHECK(candidates[0].prominence == 100.0f);  // ring median is exactly 0
  CHECK(candidates[0].local_background == 0.0f);
}

TEST_CASE("stage1: adjacent spikes resolve to the brighter pixel") {
  RasterFrame frame = testsup::flat_frame(64, 64, 0.0f);
  set_px(frame, 30, 30, 100.0f);
  set_px(frame, 30, 31, 90.0f);
  const auto candidates = detect_light_sources(frame, default_params(10.0));
  REQUIRE(candidates.size() == 1);
  CHECK(candidates[0].row == 30);
  CHECK(candidates[0].col == 30);
  CHECK(candidates[0].peak_radiance == 100.0f);
}

TEST_CASE("stage1: NMS keeps the brightest candidate per window") {
  RasterFrame frame = testsup::flat_frame(64, 64, 0.0f);
  // Two isolated maxima two pixels apart: both survive a 3-window, the
  // dimmer one dies under a 5-window.
  set_px(frame, 30, 30, 100.0f);
  set_px(frame, 30, 32, 80.0f);
  auto p3 = default_params(10.0);
  p3.nms_window = 3;
  CHECK(detect_light_sources(frame, p3).size() == 2);
  auto p5 = default_params(10.0);
  p5.nms_window = 5;
  const auto survivors = detect_light_sources(frame, p5);
  REQUIRE(survivors.size() == 1);
  CHECK(survivors[0].col == 30);
}

TEST_CASE("stage1: full recall on synthetic vessels at >= 10 sigma") {
  SceneSpec spec;
  spec.seed = 42;
  spec.width = spec.height = 512;
  spec.vessel_count = 20;
  spec.placement_margin_px = 32;
  auto [frame, truth] = generate_frame(spec);
  Stage1Params params = default_params(6.0 * spec.background_noise_sigma_nw);
  const auto candidates = detect_light_sources(frame, params);
  const auto vessels = truth.of_kind(TruthKind::Vessel);
  int found = 0;
  for (const auto& v : vessels) {
    for (const auto& c : candidates) {
      if (c.row == v.row && c.col == v.col) {
        ++found;
        break;
      }
    }
  }
  CHECK(found == 20);
}

TEST_CASE("stage1: background offset leaves candidates unchanged") {
  RasterFrame frame = quantized_noise_frame(96, 9001);
  set_px(frame, 40, 40, 64.0f);
  set_px(frame, 70, 22, 80.0f);
  const auto params = default_params(32.0);
  const auto base = detect_light_sources(frame, params);
  REQUIRE(base.size() == 2);

  RasterFrame shifted = frame;
  for (auto& v : shifted.planes[0]) v += 16.0f;  // exact in float
  const auto moved = detect_light_sources(shifted, params);
  REQUIRE(moved.size() == base.size());
  for (size_t i = 0; i < base.size(); ++i) {
    CHECK(moved[i].row == base[i].row);
    CHECK(moved[i].col == base[i].col);
    CHECK(moved[i].prominence == base[i].prominence);
  }
}

TEST_CASE("stage1: scaling radiance and threshold scales prominence") {
  RasterFrame frame = quantized_noise_frame(96, 9002);
  set_px(frame, 40, 40, 64.0f);
  set_px(frame, 12, 80, 96.0f);
  auto params = default_params(32.0);
  const auto base = detect_light_sources(frame, params);
  REQUIRE(!base.empty());

  RasterFrame scaled = frame;
  for (auto& v : scaled.planes[0]) v *= 4.0f;  // power of two: exact
  auto scaled_params = params;
  scaled_params.prominence_threshold *= 4.0;
  const auto result = detect_light_sources(scaled, scaled_params);
  REQUIRE(result.size() == base.size());
  for (size_t i = 0; i < base.size(); ++i) {
    CHECK(result[i].row == base[i].row);
    CHECK(result[i].col == base[i].col);
    CHECK(result[i].prominence == 4.0f * base[i].prominence);
  }
}

TEST_CASE("stage1: no two candidates share an NMS window (random frames)") {
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    RasterFrame frame = quantized_noise_frame(80, 3000 + trial);
    for (int k = 0; k < 30; ++k)
      set_px(frame, rng.next_int(6, 73), rng.next_int(6, 73),
             static_cast<float>(rng.next_int(40, 120)));
    auto params = default_params(8.0);
    params.nms_window = 5;
    const auto candidates = detect_light_sources(frame, params);
    const int radius = params.nms_window / 2;
    for (size_t i = 0; i < candidates.size(); ++i) {
      for (size_t j = i + 1; j < candidates.size(); ++j) {
        const bool conflict = std::abs(candidates[i].row - candidates[j].row) <= radius &&
                              std::abs(candidates[i].col - candidates[j].col) <= radius;
        CHECK_FALSE(conflict);
      }
    }
  }
}

TEST_CASE("stage1: raising the threshold never adds candidates") {
  RasterFrame frame = quantized_noise_frame(96, 77);
  Rng rng(78);
  for (int k = 0; k < 25; ++k)
    set_px(frame, rng.next_int(6, 89), rng.next_int(6, 89),
           static_cast<float>(rng.next_int(20, 150)));
  std::set<std::pair<int, int>> prev;
  bool first = true;
  for (double threshold : {5.0, 10.0, 20.0, 40.0, 80.0}) {
    const auto candidates = detect_light_sources(frame, default_params(threshold));
    std::set<std::pair<int, int>> current;
    for (const auto& c : candidates) current.insert({c.row, c.col});
    if (!first) {
      for (const auto& pos : current) CHECK(prev.count(pos) == 1);  // subset
    }
    prev = std::move(current);
    first = false;
  }
}

TEST_CASE("stage1: NaN pixels never become candidates and poison rings safely") {
  RasterFrame frame = testsup::flat_frame(64, 64, 0.0f);
  set_px(frame, 20, 20, std::nanf(""));
  set_px(frame, 40, 40, 100.0f);
  // Candidate with a mostly-NaN ring is dropped.
  RasterFrame poisoned = frame;
  for (int dr = -5; dr <= 5; ++dr)
    for (int dc = -5; dc <= 5; ++dc)
      if (std::max(std::abs(dr), std::abs(dc)) > 2)
        set_px(poisoned, 40 + dr, 40 + dc, std::nanf(""));

  const auto clean = detect_light_sources(frame, default_params(10.0));
  REQUIRE(clean.size() == 1);
  CHECK(clean[0].row == 40);

  const auto dropped = detect_light_sources(poisoned, default_params(10.0));
  CHECK(dropped.empty());
}

TEST_CASE("stage1: frame smaller than the kernel support is an error") {
  const RasterFrame frame = testsup::flat_frame(10, 64, 0.0f);
  CHECK_THROWS_AS(detect_light_sources(frame, default_params()), ConfigError);
  const RasterFrame tall = testsup::flat_frame(64, 10, 0.0f);
  CHECK_THROWS_AS(detect_light_sources(tall, default_params()), ConfigError);
}

TEST_CASE("stage1: invalid params are rejected") {
  const RasterFrame frame = testsup::flat_frame(64, 64, 0.0f);
  Stage1Params bad_ring = default_params();
  bad_ring.ring_outer = 2;
  CHECK_THROWS_AS(detect_light_sources(frame, bad_ring), ConfigError);
  Stage1Params bad_nms = default_params();
  bad_nms.nms_window = 4;
  CHECK_THROWS_AS(detect_light_sources(frame, bad_nms), ConfigError);
}

TEST_CASE("stage1: tiled parallel scan equals sequential evaluation") {
  SceneSpec spec;
  spec.seed = 314;
  spec.width = spec.height = 384;
  spec.vessel_count = 15;
  spec.placement_margin_px = 24;
  spec.streaks.push_back(StreakSpec{190, 12, 20.0, 40.0});
  auto [frame, truth] = generate_frame(spec);
  const auto params = default_params(6.0 * spec.background_noise_sigma_nw);

  const auto seq = detect_light_sources(frame, params, 1);
  for (int threads : {2, 3, 4}) {
    const auto par = detect_light_sources(frame, params, threads);
    REQUIRE(par.size() == seq.size());
    for (size_t i = 0; i < seq.size(); ++i) {
      CHECK(par[i].row == seq[i].row);
      CHECK(par[i].col == seq[i].col);
      CHECK(par[i].prominence == seq[i].prominence);
      CHECK(par[i].snr == seq[i].snr);
    }
  }
}

TEST_CASE("stage1: sigma estimators respond to land masking") {
  RasterFrame frame = quantized_noise_frame(64, 15);
  const double all = estimate_noise_sigma(frame, Stage1Params::SigmaEstimator::MAD);
  CHECK(all > 0.0);
  // Put wild values on land; water-only sigma must not change.
  auto& land = frame.planes[1];
  auto& rad = frame.planes[0];
  for (int c = 0; c < frame.width; ++c) {
    land[c] = 1.0f;
    rad[c] = 1e6f;
  }
  const double water_only = estimate_noise_sigma(frame, Stage1Params::SigmaEstimator::MAD);
  CHECK(water_only == doctest::Approx(all).epsilon(0.05));
  const double stddev = estimate_noise_sigma(frame, Stage1Params::SigmaEstimator::Stddev);
  CHECK(stddev > 0.0);
}
