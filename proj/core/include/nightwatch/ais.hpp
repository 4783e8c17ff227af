#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nightwatch/geo.hpp"

namespace nightwatch {

/// One broadcast position report.
struct AisPosition {
  std::string vessel_id;  // MMSI-like identity
  int64_t ts_ms = 0;
  GeoPoint geo;
  std::optional<double> sog_mps;   // speed over ground
  std::optional<double> cog_deg;   // course over ground
};

/// Time-ordered reports for one vessel identity.
struct AisTrack {
  std::string vessel_id;
  std::vector<AisPosition> reports;  // ascending ts_ms
};

/// Estimated position at a query time plus the offset to the nearest report
/// actually used (how stale the estimate is — drives the correlation gate).
struct TrackPoint {
  GeoPoint geo;
  int64_t nearest_report_offset_ms = 0;
};

/// Position at time t: linear lat/lon interpolation between the bracketing
/// reports; clamped to the nearest endpoint when t lies outside the track
/// span but within max_extrapolation_ms; nullopt beyond that. Throws Error
/// on an unsorted track.
std::optional<TrackPoint> interpolate_track(const AisTrack& track, int64_t t_ms,
                                            int64_t max_extrapolation_ms);

/// Parse JSON lines: {"mmsi":str,"ts":iso8601,"lat":…,"lon":…,
/// "sog_knots":…,"cog_deg":…} (speed/course optional). Errors carry the line
/// number.
std::vector<AisPosition> load_ais_jsonl(const std::string& path);
std::vector<AisPosition> parse_ais_jsonl(const std::string& text, const std::string& origin);
void save_ais_jsonl(const std::vector<AisPosition>& positions, const std::string& path);

/// Group by vessel id and sort each track by timestamp. Track order follows
/// first appearance in the input.
std::vector<AisTrack> build_tracks(const std::vector<AisPosition>& positions);

}  // namespace nightwatch
