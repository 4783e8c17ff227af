#pragma once

#include <string>
#include <vector>

namespace nightwatch {

/// IUGG mean Earth radius, meters. Spherical model: error is well under the
/// 750 m pixel footprint this pipeline operates at.
inline constexpr double kEarthRadiusM = 6371008.8;

struct GeoPoint {
  double lat_deg = 0.0;  // [-90, 90]
  double lon_deg = 0.0;  // normalized to [-180, 180)
};

/// Normalize a longitude into [-180, 180).
double normalize_lon(double lon_deg);

/// Validating constructor: throws ConfigError when lat is out of [-90, 90];
/// longitude is normalized.
GeoPoint make_geo_point(double lat_deg, double lon_deg);

/// Great-circle distance in meters on the sphere. Total on valid points:
/// symmetric, >= 0, <= pi * R.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

/// Closed ring on the sphere. Must not cross a pole; rings crossing the
/// antimeridian are stored in unwrapped longitude space and containment is
/// evaluated there. Boundary points count as inside.
class GeoPolygon {
 public:
  /// Requires >= 3 distinct vertices; throws ConfigError otherwise.
  static GeoPolygon from_vertices(std::vector<GeoPoint> vertices, std::string name = "");

  /// Load `{"name": str, "vertices": [[lat, lon], ...]}`.
  static GeoPolygon from_json_file(const std::string& path);
  static GeoPolygon from_json_text(const std::string& text);

  bool contains(const GeoPoint& p) const;

  const std::string& name() const { return name_; }
  const std::vector<GeoPoint>& vertices() const { return verts_; }
  bool crosses_antimeridian() const { return wraps_; }

 private:
  GeoPolygon() = default;

  std::string name_;
  std::vector<GeoPoint> verts_;  // unwrapped lons when wraps_
  bool wraps_ = false;
  double min_lon_ = 0.0;  // of the unwrapped ring
};

}  // namespace nightwatch
