#include <doctest.h>

#include <cmath>
#include <fstream>

#include "nightwatch/errors.hpp"
#include "nightwatch/geo.hpp"
#include "nightwatch/rng.hpp"
#include "oracles/test_support.hpp"

using namespace nightwatch;

TEST_CASE("haversine: identical points give zero") {
  const GeoPoint p = make_geo_point(12.5, -44.25);
  CHECK(haversine_m(p, p) == 0.0);
  CHECK(haversine_m(GeoPoint{0, 0}, GeoPoint{0, 0}) == 0.0);
}

TEST_CASE("haversine: one equatorial degree") {
  // Analytic arc: R * pi / 180.
  const double d = haversine_m(make_geo_point(0, 0), make_geo_point(0, 1));
  CHECK(d == doctest::Approx(111195.08).epsilon(0).scale(1).epsilon(0.5 / 111195.08));
  CHECK(std::abs(d - kEarthRadiusM * 3.14159265358979323846 / 180.0) < 1e-6);
}

TEST_CASE("haversine: antipodal poles") {
  const double d = haversine_m(make_geo_point(90, 0), make_geo_point(-90, 0));
  CHECK(std::abs(d - kEarthRadiusM * 3.14159265358979323846) < 1.0);
}

TEST_CASE("haversine: symmetry, bounds, zero on random pairs") {
  Rng rng(20240001);
  const double half_circ = kEarthRadiusM * 3.14159265358979323846;
  for (int i = 0; i < 10000; ++i) {
    const GeoPoint a = make_geo_point(rng.uniform(-90, 90), rng.uniform(-180, 180));
    const GeoPoint b = make_geo_point(rng.uniform(-90, 90), rng.uniform(-180, 180));
    const double dab = haversine_m(a, b);
    CHECK(dab == haversine_m(b, a));  // exact
    CHECK(dab >= 0.0);
    CHECK(dab <= half_circ + 1e-6);
    CHECK(haversine_m(a, a) == 0.0);
  }
}

TEST_CASE("haversine: triangle inequality on random triples") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const GeoPoint a = make_geo_point(rng.uniform(-89, 89), rng.uniform(-180, 180));
    const GeoPoint b = make_geo_point(rng.uniform(-89, 89), rng.uniform(-180, 180));
    const GeoPoint c = make_geo_point(rng.uniform(-89, 89), rng.uniform(-180, 180));
    const double ab = haversine_m(a, b);
    const double bc = haversine_m(b, c);
    const double ac = haversine_m(a, c);
    CHECK(ac <= (ab + bc) * (1.0 + 1e-9) + 1e-9);
  }
}

TEST_CASE("haversine: antimeridian wrap is seamless") {
  const double near = haversine_m(make_geo_point(0, 179.9), make_geo_point(0, -179.9));
  const double same = haversine_m(make_geo_point(0, 0.0), make_geo_point(0, 0.2));
  CHECK(near == doctest::Approx(same).epsilon(1e-9));
}

TEST_CASE("geo point validation") {
  CHECK_THROWS_AS(make_geo_point(90.01, 0), ConfigError);
  CHECK_THROWS_AS(make_geo_point(-91, 0), ConfigError);
  CHECK(make_geo_point(0, 180.0).lon_deg == -180.0);
  CHECK(make_geo_point(0, 540.0).lon_deg == -180.0);
  CHECK(make_geo_point(0, -180.0).lon_deg == -180.0);
  CHECK(make_geo_point(45, 360.25).lon_deg == doctest::Approx(0.25));
}

namespace {

GeoPolygon unit_square() {
  return GeoPolygon::from_vertices(
      {GeoPoint{0, 0}, GeoPoint{0, 1}, GeoPoint{1, 1}, GeoPoint{1, 0}}, "unit");
}

}  // namespace

TEST_CASE("polygon containment: unit square") {
  const GeoPolygon square = unit_square();
  CHECK(square.contains(make_geo_point(0.5, 0.5)));
  CHECK_FALSE(square.contains(make_geo_point(2, 2)));
  CHECK(square.contains(make_geo_point(0, 0)));      // vertex: boundary is inside
  CHECK(square.contains(make_geo_point(0, 0.5)));    // edge
  CHECK(square.contains(make_geo_point(0.5, 1.0)));  // edge
  CHECK_FALSE(square.contains(make_geo_point(-0.0001, 0.5)));
}

TEST_CASE("polygon containment: invariant under 360-degree longitude shifts") {
  const GeoPolygon square = unit_square();
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    const double lat = rng.uniform(-2, 3);
    const double lon = rng.uniform(-2, 3);
    const bool base = square.contains(make_geo_point(lat, lon));
    CHECK(square.contains(make_geo_point(lat, lon + 360.0)) == base);
    CHECK(square.contains(make_geo_point(lat, lon - 360.0)) == base);
  }
  // The polygon itself shifted by 360 degrees is the same region.
  const GeoPolygon shifted = GeoPolygon::from_vertices(
      {GeoPoint{0, 360}, GeoPoint{0, 361}, GeoPoint{1, 361}, GeoPoint{1, 360}}, "shifted");
  for (int i = 0; i < 200; ++i) {
    const double lat = rng.uniform(-2, 3);
    const double lon = rng.uniform(-2, 3);
    CHECK(shifted.contains(make_geo_point(lat, lon)) ==
          square.contains(make_geo_point(lat, lon)));
  }
}

TEST_CASE("polygon containment: antimeridian crossing") {
  const GeoPolygon poly = GeoPolygon::from_vertices(
      {GeoPoint{-5, 175}, GeoPoint{-5, -175}, GeoPoint{5, -175}, GeoPoint{5, 175}}, "dateline");
  CHECK(poly.crosses_antimeridian());
  CHECK(poly.contains(make_geo_point(0, 179)));
  CHECK(poly.contains(make_geo_point(0, -179)));
  CHECK(poly.contains(make_geo_point(0, -180)));
  CHECK_FALSE(poly.contains(make_geo_point(0, 170)));
  CHECK_FALSE(poly.contains(make_geo_point(0, -170)));
  CHECK_FALSE(poly.contains(make_geo_point(8, 179)));
}

TEST_CASE("polygon validation") {
  CHECK_THROWS_AS(GeoPolygon::from_vertices({GeoPoint{0, 0}, GeoPoint{1, 1}}, "degenerate"),
                  ConfigError);
  // Duplicate vertices collapse below the minimum.
  CHECK_THROWS_AS(GeoPolygon::from_vertices(
                      {GeoPoint{0, 0}, GeoPoint{0, 0}, GeoPoint{1, 1}, GeoPoint{1, 1}}, "dups"),
                  ConfigError);
  // A closing vertex equal to the first is accepted and dropped.
  const GeoPolygon closed = GeoPolygon::from_vertices(
      {GeoPoint{0, 0}, GeoPoint{0, 1}, GeoPoint{1, 1}, GeoPoint{0, 0}}, "closed");
  CHECK(closed.vertices().size() == 3);
}

TEST_CASE("polygon JSON file round trip") {
  testsup::TempDir dir("poly");
  const std::string path = dir.str("region.json");
  {
    std::ofstream out(path);
    out << R"({"name":"test-region","vertices":[[0,0],[0,1],[1,1],[1,0]]})";
  }
  const GeoPolygon poly = GeoPolygon::from_json_file(path);
  CHECK(poly.name() == "test-region");
  CHECK(poly.contains(make_geo_point(0.5, 0.5)));
  CHECK_THROWS_AS(GeoPolygon::from_json_file(dir.str("missing.json")), FormatError);
  CHECK_THROWS_AS(GeoPolygon::from_json_text("{\"vertices\":[[0,0]]}"), ConfigError);
  CHECK_THROWS_AS(GeoPolygon::from_json_text("not json"), FormatError);
}
