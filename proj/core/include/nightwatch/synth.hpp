#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nightwatch/ais.hpp"
#include "nightwatch/geo.hpp"
#include "nightwatch/raster.hpp"

namespace nightwatch {

// Deterministic synthetic frame + AIS generator with ground truth. Injected
// artifacts mirror the pipeline's named failure modes so suppression rules
// can be scored against known positions.

struct FlareSiteSpec {
  double lat = 0.0;
  double lon = 0.0;
  double intensity_nw = 80.0;
  double radius_m = 1500.0;  // gazetteer suppression radius
};

struct AuroraSpec {
  double band_lat_lo = 60.5;  // smooth glow between these latitudes
  double band_lat_hi = 62.5;
  double glow_lo_nw = 35.0;
  double glow_hi_nw = 50.0;
  int bump_count = 6;  // embedded diffuse local maxima (the countable artifacts)
  double bump_lo_nw = 16.0;
  double bump_hi_nw = 24.0;
};

struct StreakSpec {
  int row = 0;
  int count = 18;
  double lo_nw = 20.0;
  double hi_nw = 40.0;
};

struct SmileSpec {
  int margin_px = 64;           // affected columns at each along-scan edge
  double noise_multiplier = 1.5;  // edge noise elevation
  int per_edge_count = 6;       // countable injected spikes
  double lo_nw = 16.0;          // 8-10 sigma: detectable but below snr_keep
  double hi_nw = 20.0;
};

struct CloudSpec {
  int patch_count = 2;
  double patch_radius_px = 45.0;
  double glow_lo_nw = 20.0;
  double glow_hi_nw = 30.0;
  double moonlight_level = 0.75;  // scene-wide when clouds are moonlit
  int bump_count = 4;             // sheen maxima inside patches
  double bump_lo_nw = 16.0;
  double bump_hi_nw = 20.0;
};

struct SceneSpec {
  uint64_t seed = 1;
  int width = 1024;
  int height = 1024;
  double background_mean_nw = 8.0;
  double background_noise_sigma_nw = 2.0;

  int vessel_count = 20;
  double vessel_intensity_lo_nw = 20.0;  // >= 10 sigma by default
  double vessel_intensity_hi_nw = 80.0;
  int min_separation_px = 8;    // Chebyshev, vessel-to-vessel
  int placement_margin_px = 80;  // keeps vessels off frame edges and smile margins

  std::vector<FlareSiteSpec> flare_sites;
  std::optional<AuroraSpec> aurora;
  std::vector<StreakSpec> streaks;
  std::optional<SmileSpec> smile;
  std::optional<CloudSpec> clouds;
  std::vector<GeoPolygon> land_polygons;

  // Georeference: affine, top-left pixel center at (origin_lat, origin_lon),
  // square degrees-per-pixel, latitude decreasing with row.
  double origin_lat = 33.0;
  double origin_lon = -155.0;
  double deg_per_px = 0.006742;  // ~750 m
  double moonlight_base = 0.1;

  std::string frame_id;  // default "synth-<seed>"
  std::string satellite_id = "SYNTH-1";
  int64_t acquired_at_ms = 1700000000000;  // 2023-11-14T22:13:20Z

  static SceneSpec from_json_file(const std::string& path);
  static SceneSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

enum class TruthKind { Vessel, Flare, Aurora, Streak, Smile, Cloud };
const char* to_string(TruthKind kind);
TruthKind truth_kind_from_string(const std::string& name);

struct TruthRecord {
  std::string id;
  TruthKind kind = TruthKind::Vessel;
  int row = 0;
  int col = 0;
  GeoPoint geo;
  double intensity_nw = 0.0;
};

struct GroundTruth {
  std::string frame_id;
  int64_t acquired_at_ms = 0;
  std::vector<TruthRecord> records;

  std::vector<TruthRecord> of_kind(TruthKind kind) const;
  void save_jsonl(const std::string& path) const;
  static GroundTruth load_jsonl(const std::string& path);
};

/// Deterministic given the spec (fixed PRNG; see rng.hpp). Vessels are 1-2 px
/// point sources whose peak pixel is set to background mean + intensity, so
/// every ground-truth vessel measurably exceeds background. Throws Error when
/// a vessel cannot be placed within 1000 attempts.
std::pair<RasterFrame, GroundTruth> generate_frame(const SceneSpec& spec);

/// One AIS report per non-dark vessel, displaced uniformly within jitter_m of
/// the truth position, timestamped at the frame acquisition time. The dark
/// count is round-half-away-from-zero of vessel_count * dark_fraction;
/// deterministic given seed.
std::vector<AisPosition> generate_ais(const GroundTruth& truth, double jitter_m,
                                      double dark_fraction, uint64_t seed);

/// Reference scenes used by the acceptance runs and the CLI presets.
/// "low" = mid-latitude: flare + streak + smile + moonlit clouds.
/// "high" = high-latitude: aurora + streak + smile.
SceneSpec default_low_lat_scene(uint64_t seed);
SceneSpec default_high_lat_scene(uint64_t seed);

}  // namespace nightwatch
