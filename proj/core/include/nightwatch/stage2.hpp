#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nightwatch/geo.hpp"
#include "nightwatch/raster.hpp"
#include "nightwatch/stage1.hpp"

namespace nightwatch {

enum class SuppressionRule {
  Land,
  GasFlare,
  MoonlitCloud,
  Aurora,
  Saa,
  Scanline,
  NoiseSmile,
};

const char* to_string(SuppressionRule rule);
SuppressionRule suppression_rule_from_string(const std::string& name);

struct SuppressionFlag {
  SuppressionRule rule;
  std::string detail;
};

/// A stage-1 candidate with its accumulated suppression annotations. Rules
/// annotate, never delete: the candidate set is preserved through stage two
/// so every suppression is auditable.
struct FlaggedCandidate {
  LightCandidate candidate;
  std::vector<SuppressionFlag> flags;

  bool has(SuppressionRule rule) const {
    for (const auto& f : flags)
      if (f.rule == rule) return true;
    return false;
  }
};

std::vector<FlaggedCandidate> to_flagged(const std::vector<LightCandidate>& cands);

/// Known persistent combustion sites; candidates within radius are flagged
/// GAS_FLARE (boundary inclusive).
struct FlareGazetteer {
  struct Site {
    GeoPoint geo;
    double radius_m;
  };
  std::vector<Site> sites;

  /// JSON lines: {"lat":…,"lon":…,"radius_m":…}. Throws with line number.
  static FlareGazetteer load_jsonl(const std::string& path);
  void save_jsonl(const std::string& path) const;
};

// ---- individual rules (pure: input candidates -> annotated candidates) ----

std::vector<FlaggedCandidate> mask_land(std::vector<FlaggedCandidate> cands,
                                        const RasterFrame& frame);

std::vector<FlaggedCandidate> suppress_gas_flares(std::vector<FlaggedCandidate> cands,
                                                  const FlareGazetteer& gazetteer);

std::vector<FlaggedCandidate> suppress_moonlit_clouds(std::vector<FlaggedCandidate> cands,
                                                      const RasterFrame& frame,
                                                      double moon_thresh, double cloud_thresh,
                                                      double snr_keep);

/// Aurora is extended glow; vessels are point sources. A candidate at high
/// latitude whose ring background dominates its peak is flagged.
std::vector<FlaggedCandidate> suppress_aurora(std::vector<FlaggedCandidate> cands,
                                              const RasterFrame& frame, double lat_gate_deg,
                                              double diffuseness_thresh);

std::vector<FlaggedCandidate> suppress_saa(std::vector<FlaggedCandidate> cands,
                                           const GeoPolygon& saa_polygon, double snr_keep);

/// Exact binomial tail P(X >= k), X ~ Binomial(n, p). Evaluated in log space.
double binomial_tail(int k, int n, double p);

/// Rows holding an improbably large share of the frame's candidates are
/// detector/lightning artifacts: flag every candidate on a row whose
/// Bonferroni-corrected binomial tail (h * P(X >= k), h = frame rows) falls
/// below p_value_thresh.
std::vector<FlaggedCandidate> scanline_test(std::vector<FlaggedCandidate> cands,
                                            const RasterFrame& frame, double p_value_thresh);

std::vector<FlaggedCandidate> suppress_noise_smile(std::vector<FlaggedCandidate> cands,
                                                   const RasterFrame& frame, int edge_margin_px,
                                                   double snr_keep);

// ---- composed stage ----

struct Stage2Config {
  FlareGazetteer gazetteer;
  std::optional<GeoPolygon> saa_polygon;  // nullopt disables the SAA rule
  double saa_snr_keep = 10.0;
  double moon_thresh = 0.5;
  double cloud_thresh = 0.5;
  double cloud_snr_keep = 12.0;
  double aurora_lat_gate_deg = 55.0;
  double aurora_diffuseness_thresh = 0.45;
  double scanline_p_value = 1e-3;
  int noise_smile_margin_px = 64;
  double noise_smile_snr_keep = 12.0;

  /// Rectangle over the region of elevated ionospheric noise; operators
  /// should override with their own calibrated polygon.
  static GeoPolygon default_saa_polygon();
};

struct Stage2Result {
  std::vector<FlaggedCandidate> kept;        // no flags
  std::vector<FlaggedCandidate> suppressed;  // >= 1 flag, retained for audit
};

/// Apply every rule in fixed order (LAND, GAS_FLARE, SAA, SCANLINE,
/// NOISE_SMILE, MOONLIT_CLOUD, AURORA) and partition. Flags are conjunctive
/// annotations over the original candidate set, so the kept set is
/// independent of rule order.
Stage2Result run_stage2(const std::vector<LightCandidate>& cands, const RasterFrame& frame,
                        const Stage2Config& config);

}  // namespace nightwatch
