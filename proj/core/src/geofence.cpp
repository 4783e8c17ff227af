#include "nightwatch/geofence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "nightwatch/errors.hpp"

namespace nightwatch {

namespace {

constexpr double kCellDeg = 0.1;
constexpr int kLonCells = 3600;
constexpr int kLatCells = 1800;
constexpr double kMaxEntryRadiusM = 5000.0;
constexpr double kMetersPerDegLat = 111194.92664455873;  // pi * R / 180

int lat_cell(double lat) {
  const int c = static_cast<int>(std::floor((lat + 90.0) / kCellDeg));
  return std::clamp(c, 0, kLatCells - 1);
}

int lon_cell(double lon) {
  int c = static_cast<int>(std::floor((lon + 180.0) / kCellDeg));
  c %= kLonCells;
  if (c < 0) c += kLonCells;
  return c;
}

int64_t cell_key(int latc, int lonc) { return static_cast<int64_t>(latc) * kLonCells + lonc; }

}  // namespace

const char* to_string(InfraKind kind) {
  switch (kind) {
    case InfraKind::WindTurbine: return "wind_turbine";
    case InfraKind::Platform: return "platform";
    case InfraKind::Other: return "other";
  }
  return "other";
}

InfraKind infra_kind_from_string(const std::string& name) {
  if (name == "wind_turbine") return InfraKind::WindTurbine;
  if (name == "platform") return InfraKind::Platform;
  if (name == "other") return InfraKind::Other;
  throw FormatError("unknown infrastructure kind '" + name + "'");
}

InfrastructureIndex InfrastructureIndex::from_entries(std::vector<InfraEntry> entries) {
  InfrastructureIndex index;
  for (auto& e : entries) {
    if (!(e.radius_m > 0.0) || e.radius_m > kMaxEntryRadiusM)
      throw FormatError("infrastructure radius_m must be in (0, 5000], got " +
                        std::to_string(e.radius_m));
    e.geo = make_geo_point(e.geo.lat_deg, e.geo.lon_deg);
  }
  index.entries_ = std::move(entries);
  for (size_t i = 0; i < index.entries_.size(); ++i) {
    const auto& e = index.entries_[i];
    index.grid_[cell_key(lat_cell(e.geo.lat_deg), lon_cell(e.geo.lon_deg))].push_back(
        static_cast<int>(i));
    index.max_radius_m_ = std::max(index.max_radius_m_, e.radius_m);
  }
  return index;
}

InfrastructureIndex InfrastructureIndex::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open infrastructure file: " + path);
  std::vector<InfraEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      InfraEntry e;
      e.geo = make_geo_point(j.at("lat").get<double>(), j.at("lon").get<double>());
      e.kind = infra_kind_from_string(j.value("kind", std::string("other")));
      e.radius_m = j.value("radius_m", 500.0);
      if (!(e.radius_m > 0.0) || e.radius_m > kMaxEntryRadiusM)
        throw FormatError("radius_m must be in (0, 5000]");
      entries.push_back(e);
    } catch (const std::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": bad infrastructure record: " + e.what());
    }
  }
  return from_entries(std::move(entries));
}

std::optional<InfraEntry> InfrastructureIndex::covering_entry(const GeoPoint& point) const {
  if (entries_.empty()) return std::nullopt;
  const GeoPoint p = make_geo_point(point.lat_deg, point.lon_deg);

  // Cell window large enough to reach any entry whose disc might cover p.
  const double reach = max_radius_m_;
  const int dlat_cells = static_cast<int>(reach / (kMetersPerDegLat * kCellDeg)) + 1;

  // Longitude degrees shrink with latitude; size the window at the widest
  // latitude the search can touch, scanning the full ring near the poles.
  const double pad_deg = static_cast<double>(dlat_cells + 1) * kCellDeg;
  const double worst_lat = std::min(89.95, std::abs(p.lat_deg) + pad_deg);
  const double meters_per_deg_lon = kMetersPerDegLat * std::cos(worst_lat * 0.017453292519943295);
  int dlon_cells;
  if (meters_per_deg_lon < reach / 180.0)
    dlon_cells = kLonCells / 2;
  else
    dlon_cells = std::min(kLonCells / 2,
                          static_cast<int>(reach / (meters_per_deg_lon * kCellDeg)) + 1);

  const int pc_lat = lat_cell(p.lat_deg);
  const int pc_lon = lon_cell(p.lon_deg);

  int best = -1;
  for (int dr = -dlat_cells; dr <= dlat_cells; ++dr) {
    const int latc = pc_lat + dr;
    if (latc < 0 || latc >= kLatCells) continue;
    for (int dc = -dlon_cells; dc <= dlon_cells; ++dc) {
      int lonc = (pc_lon + dc) % kLonCells;
      if (lonc < 0) lonc += kLonCells;
      const auto it = grid_.find(cell_key(latc, lonc));
      if (it == grid_.end()) continue;
      for (int idx : it->second) {
        const auto& e = entries_[static_cast<size_t>(idx)];
        if (haversine_m(p, e.geo) <= e.radius_m && (best < 0 || idx < best)) best = idx;
      }
    }
  }
  if (best < 0) return std::nullopt;
  return entries_[static_cast<size_t>(best)];
}

std::optional<InfraEntry> InfrastructureIndex::covering_entry_scan(const GeoPoint& point) const {
  const GeoPoint p = make_geo_point(point.lat_deg, point.lon_deg);
  for (const auto& e : entries_)
    if (haversine_m(p, e.geo) <= e.radius_m) return e;
  return std::nullopt;
}

GeofenceResult suppress_near_infrastructure(const std::vector<GeoPoint>& detections,
                                            const InfrastructureIndex& index) {
  GeofenceResult result;
  for (size_t i = 0; i < detections.size(); ++i) {
    const auto hit = index.covering_entry(detections[i]);
    if (hit)
      result.suppressed.emplace_back(i, *hit);
    else
      result.kept.push_back(i);
  }
  return result;
}

}  // namespace nightwatch
