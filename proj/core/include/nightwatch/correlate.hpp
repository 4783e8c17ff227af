#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nightwatch/ais.hpp"
#include "nightwatch/assignment.hpp"
#include "nightwatch/geo.hpp"

namespace nightwatch {

/// Minimal view of a detection for correlation purposes.
struct DetectionPoint {
  std::string detection_id;
  GeoPoint geo;
};

/// Gate radius = base_uncertainty_m + max_speed_mps * |dt|, where dt is the
/// offset between the AIS report(s) used and the frame time. Defaults encode
/// 2 px of position uncertainty at 750 m/px plus 25 kn of vessel motion.
struct GateParams {
  double base_uncertainty_m = 1500.0;
  double max_speed_mps = 12.86;
  int64_t max_extrapolation_ms = 1'800'000;  // 30 min
};

struct CorrelationMatch {
  std::string detection_id;
  std::string vessel_id;
  double distance_m = 0.0;
};

struct CorrelationResult {
  std::vector<CorrelationMatch> matches;        // one-to-one
  std::vector<std::string> dark_detections;     // no AIS within gate
  std::vector<std::string> unmatched_ais;       // tracks left unpaired
};

/// Flat-gate cost matrix: entry (i,j) = haversine(det_i, ais_j) when within
/// gate_m, FORBIDDEN otherwise.
CostMatrix build_cost_matrix(const std::vector<DetectionPoint>& detections,
                             const std::vector<GeoPoint>& ais_at_t, double gate_m);

/// Per-track gated matrix at frame time: tracks that yield no position
/// within max_extrapolation_ms get an all-FORBIDDEN column. Exposed so the
/// matching can be audited against the brute-force oracle.
CostMatrix build_gated_matrix(const std::vector<DetectionPoint>& detections,
                              const std::vector<AisTrack>& tracks, int64_t frame_time_ms,
                              const GateParams& gate);

/// Match detections to AIS tracks at frame time by minimum-weight bipartite
/// matching on gated haversine costs. Unmatched detections are dark.
CorrelationResult correlate(const std::vector<DetectionPoint>& detections,
                            const std::vector<AisTrack>& tracks, int64_t frame_time_ms,
                            const GateParams& gate);

}  // namespace nightwatch
