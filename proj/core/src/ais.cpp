#include "nightwatch/ais.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "nightwatch/errors.hpp"
#include "nightwatch/timeutil.hpp"

namespace nightwatch {

namespace {
constexpr double kKnotsToMps = 0.5144444444444445;
}

std::optional<TrackPoint> interpolate_track(const AisTrack& track, int64_t t_ms,
                                            int64_t max_extrapolation_ms) {
  const auto& reports = track.reports;
  if (reports.empty()) return std::nullopt;
  for (size_t i = 1; i < reports.size(); ++i)
    if (reports[i].ts_ms < reports[i - 1].ts_ms)
      throw Error("track '" + track.vessel_id + "' is not time-ordered");

  if (t_ms < reports.front().ts_ms) {
    const int64_t gap = reports.front().ts_ms - t_ms;
    if (gap > max_extrapolation_ms) return std::nullopt;
    return TrackPoint{reports.front().geo, gap};
  }
  if (t_ms > reports.back().ts_ms) {
    const int64_t gap = t_ms - reports.back().ts_ms;
    if (gap > max_extrapolation_ms) return std::nullopt;
    return TrackPoint{reports.back().geo, gap};
  }

  // Bracketing pair: first report at or after t.
  const auto it = std::lower_bound(
      reports.begin(), reports.end(), t_ms,
      [](const AisPosition& r, int64_t t) { return r.ts_ms < t; });
  const auto& after = *it;
  if (after.ts_ms == t_ms) return TrackPoint{after.geo, 0};
  const auto& before = *std::prev(it);
  const double span = static_cast<double>(after.ts_ms - before.ts_ms);
  const double frac = span > 0.0 ? static_cast<double>(t_ms - before.ts_ms) / span : 0.0;

  // Linear in lat/lon, with the lon leg unwrapped across the antimeridian.
  double dlon = after.geo.lon_deg - before.geo.lon_deg;
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  const double lat = before.geo.lat_deg + frac * (after.geo.lat_deg - before.geo.lat_deg);
  const double lon = before.geo.lon_deg + frac * dlon;
  const int64_t offset = std::min(t_ms - before.ts_ms, after.ts_ms - t_ms);
  return TrackPoint{make_geo_point(lat, lon), offset};
}

std::vector<AisPosition> parse_ais_jsonl(const std::string& text, const std::string& origin) {
  std::vector<AisPosition> out;
  size_t start = 0;
  int lineno = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AisPosition pos;
      pos.vessel_id = j.at("mmsi").get<std::string>();
      pos.ts_ms = parse_iso8601_ms(j.at("ts").get<std::string>());
      pos.geo = make_geo_point(j.at("lat").get<double>(), j.at("lon").get<double>());
      if (j.contains("sog_knots") && !j["sog_knots"].is_null())
        pos.sog_mps = j["sog_knots"].get<double>() * kKnotsToMps;
      if (j.contains("cog_deg") && !j["cog_deg"].is_null())
        pos.cog_deg = j["cog_deg"].get<double>();
      out.push_back(std::move(pos));
    } catch (const std::exception& e) {
      throw FormatError(origin + ":" + std::to_string(lineno) + ": bad AIS record: " + e.what());
    }
  }
  return out;
}

std::vector<AisPosition> load_ais_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open AIS file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_ais_jsonl(text, path);
}

void save_ais_jsonl(const std::vector<AisPosition>& positions, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write AIS file: " + path);
  for (const auto& pos : positions) {
    nlohmann::json j{
        {"mmsi", pos.vessel_id},
        {"ts", format_iso8601_ms(pos.ts_ms)},
        {"lat", pos.geo.lat_deg},
        {"lon", pos.geo.lon_deg},
    };
    if (pos.sog_mps) j["sog_knots"] = *pos.sog_mps / kKnotsToMps;
    if (pos.cog_deg) j["cog_deg"] = *pos.cog_deg;
    out << j.dump() << "\n";
  }
}

std::vector<AisTrack> build_tracks(const std::vector<AisPosition>& positions) {
  std::vector<AisTrack> tracks;
  std::unordered_map<std::string, size_t> index;
  for (const auto& pos : positions) {
    auto [it, inserted] = index.try_emplace(pos.vessel_id, tracks.size());
    if (inserted) tracks.push_back(AisTrack{pos.vessel_id, {}});
    tracks[it->second].reports.push_back(pos);
  }
  for (auto& track : tracks) {
    std::stable_sort(track.reports.begin(), track.reports.end(),
                     [](const AisPosition& a, const AisPosition& b) { return a.ts_ms < b.ts_ms; });
  }
  return tracks;
}

}  // namespace nightwatch
