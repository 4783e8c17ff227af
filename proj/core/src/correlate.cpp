#include "nightwatch/correlate.hpp"

#include <cmath>

#include "nightwatch/errors.hpp"

namespace nightwatch {

CostMatrix build_cost_matrix(const std::vector<DetectionPoint>& detections,
                             const std::vector<GeoPoint>& ais_at_t, double gate_m) {
  if (!(gate_m > 0.0)) throw ConfigError("gate_m must be > 0");
  CostMatrix costs(static_cast<int>(detections.size()), static_cast<int>(ais_at_t.size()));
  for (size_t i = 0; i < detections.size(); ++i) {
    for (size_t j = 0; j < ais_at_t.size(); ++j) {
      const double d = haversine_m(detections[i].geo, ais_at_t[j]);
      if (d <= gate_m) costs.set(static_cast<int>(i), static_cast<int>(j), d);
    }
  }
  return costs;
}

CostMatrix build_gated_matrix(const std::vector<DetectionPoint>& detections,
                              const std::vector<AisTrack>& tracks, int64_t frame_time_ms,
                              const GateParams& gate) {
  CostMatrix costs(static_cast<int>(detections.size()), static_cast<int>(tracks.size()));
  for (size_t j = 0; j < tracks.size(); ++j) {
    const auto point = interpolate_track(tracks[j], frame_time_ms, gate.max_extrapolation_ms);
    if (!point) continue;  // column stays all-forbidden
    const double dt_s = static_cast<double>(point->nearest_report_offset_ms) / 1000.0;
    const double gate_m = gate.base_uncertainty_m + gate.max_speed_mps * std::abs(dt_s);
    for (size_t i = 0; i < detections.size(); ++i) {
      const double d = haversine_m(detections[i].geo, point->geo);
      if (d <= gate_m) costs.set(static_cast<int>(i), static_cast<int>(j), d);
    }
  }
  return costs;
}

CorrelationResult correlate(const std::vector<DetectionPoint>& detections,
                            const std::vector<AisTrack>& tracks, int64_t frame_time_ms,
                            const GateParams& gate) {
  const CostMatrix costs = build_gated_matrix(detections, tracks, frame_time_ms, gate);
  const Assignment assignment = solve_lap(costs);

  CorrelationResult result;
  for (const auto& [i, j] : assignment.pairs) {
    result.matches.push_back(CorrelationMatch{
        detections[static_cast<size_t>(i)].detection_id,
        tracks[static_cast<size_t>(j)].vessel_id,
        costs.at(i, j),
    });
  }
  for (int i : assignment.unmatched_rows)
    result.dark_detections.push_back(detections[static_cast<size_t>(i)].detection_id);
  for (int j : assignment.unmatched_cols)
    result.unmatched_ais.push_back(tracks[static_cast<size_t>(j)].vessel_id);
  return result;
}

}  // namespace nightwatch
