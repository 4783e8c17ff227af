#include "nightwatch/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "nightwatch/errors.hpp"

namespace nightwatch {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
}

double normalize_lon(double lon_deg) {
  double lon = std::fmod(lon_deg, 360.0);
  if (lon < -180.0) lon += 360.0;
  if (lon >= 180.0) lon -= 360.0;
  // fmod can return -0.0 or values a hair outside due to rounding at the seam
  if (lon < -180.0) lon = -180.0;
  return lon == -0.0 ? 0.0 : lon;
}

GeoPoint make_geo_point(double lat_deg, double lon_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
    throw ConfigError("latitude out of range: " + std::to_string(lat_deg));
  if (!std::isfinite(lon_deg)) throw ConfigError("non-finite longitude");
  return GeoPoint{lat_deg, normalize_lon(lon_deg)};
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = a.lat_deg * kDegToRad;
  const double lat2 = b.lat_deg * kDegToRad;
  const double dlat = (b.lat_deg - a.lat_deg) * kDegToRad;
  const double dlon = (b.lon_deg - a.lon_deg) * kDegToRad;
  const double sl = std::sin(dlat * 0.5);
  const double so = std::sin(dlon * 0.5);
  const double h = sl * sl + std::cos(lat1) * std::cos(lat2) * so * so;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPolygon GeoPolygon::from_vertices(std::vector<GeoPoint> vertices, std::string name) {
  // Drop an explicit closing vertex if the caller supplied one.
  if (vertices.size() >= 2) {
    const auto& f = vertices.front();
    const auto& l = vertices.back();
    if (f.lat_deg == l.lat_deg && f.lon_deg == l.lon_deg) vertices.pop_back();
  }
  std::vector<GeoPoint> distinct;
  for (const auto& v : vertices) {
    const GeoPoint p = make_geo_point(v.lat_deg, v.lon_deg);
    const bool dup = std::any_of(distinct.begin(), distinct.end(), [&](const GeoPoint& q) {
      return q.lat_deg == p.lat_deg && q.lon_deg == p.lon_deg;
    });
    if (!dup) distinct.push_back(p);
  }
  if (distinct.size() < 3)
    throw ConfigError("polygon '" + name + "' needs >= 3 distinct vertices, got " +
                      std::to_string(distinct.size()));

  GeoPolygon poly;
  poly.name_ = std::move(name);
  poly.verts_ = std::move(distinct);

  // Unwrap: keep each longitude within 180 degrees of its predecessor so a
  // ring spanning the antimeridian becomes a contiguous interval.
  for (size_t i = 1; i < poly.verts_.size(); ++i) {
    double prev = poly.verts_[i - 1].lon_deg;
    double& cur = poly.verts_[i].lon_deg;
    while (cur - prev > 180.0) cur -= 360.0;
    while (cur - prev < -180.0) cur += 360.0;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& v : poly.verts_) {
    lo = std::min(lo, v.lon_deg);
    hi = std::max(hi, v.lon_deg);
  }
  if (hi - lo >= 360.0) throw ConfigError("polygon '" + poly.name_ + "' spans >= 360 degrees");
  poly.wraps_ = lo < -180.0 || hi >= 180.0;
  poly.min_lon_ = lo;
  return poly;
}

GeoPolygon GeoPolygon::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("polygon JSON parse error: ") + e.what());
  }
  if (!j.contains("vertices") || !j["vertices"].is_array())
    throw FormatError("polygon JSON missing 'vertices' array");
  std::vector<GeoPoint> verts;
  for (const auto& v : j["vertices"]) {
    if (!v.is_array() || v.size() != 2)
      throw FormatError("polygon vertex must be [lat, lon]");
    verts.push_back(GeoPoint{v[0].get<double>(), v[1].get<double>()});
  }
  return from_vertices(std::move(verts), j.value("name", std::string{}));
}

GeoPolygon GeoPolygon::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open polygon file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

bool GeoPolygon::contains(const GeoPoint& point) const {
  const GeoPoint p = make_geo_point(point.lat_deg, point.lon_deg);
  // Map the query longitude into the ring's unwrapped interval.
  double x = p.lon_deg;
  if (wraps_ && x < min_lon_) x += 360.0;
  const double y = p.lat_deg;

  const size_t n = verts_.size();

  // Boundary counts as inside: check each edge for collinear containment.
  for (size_t i = 0; i < n; ++i) {
    const auto& a = verts_[i];
    const auto& b = verts_[(i + 1) % n];
    const double cross = (b.lon_deg - a.lon_deg) * (y - a.lat_deg) -
                         (b.lat_deg - a.lat_deg) * (x - a.lon_deg);
    if (std::abs(cross) > 1e-12) continue;
    const double dot = (x - a.lon_deg) * (b.lon_deg - a.lon_deg) +
                       (y - a.lat_deg) * (b.lat_deg - a.lat_deg);
    const double len2 = (b.lon_deg - a.lon_deg) * (b.lon_deg - a.lon_deg) +
                        (b.lat_deg - a.lat_deg) * (b.lat_deg - a.lat_deg);
    if (dot >= 0.0 && dot <= len2) return true;
  }

  // Even-odd ray cast in the unwrapped plane (half-open rule on lat).
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = verts_[i];
    const auto& b = verts_[j];
    if ((a.lat_deg > y) != (b.lat_deg > y)) {
      const double t = (y - a.lat_deg) / (b.lat_deg - a.lat_deg);
      const double xi = a.lon_deg + t * (b.lon_deg - a.lon_deg);
      if (x < xi) inside = !inside;
    }
  }
  return inside;
}

}  // namespace nightwatch
