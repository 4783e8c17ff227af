#include <benchmark/benchmark.h>

#include "nightwatch/geo.hpp"
#include "nightwatch/rng.hpp"

using namespace nightwatch;

static void BM_Haversine(benchmark::State& state) {
  Rng rng(7);
  std::vector<GeoPoint> points(1024);
  for (auto& p : points) p = make_geo_point(rng.uniform(-80, 80), rng.uniform(-180, 180));
  size_t i = 0;
  for (auto _ : state) {
    const double d = haversine_m(points[i % points.size()], points[(i + 1) % points.size()]);
    benchmark::DoNotOptimize(d);
    ++i;
  }
}
BENCHMARK(BM_Haversine);

static void BM_PolygonContains(benchmark::State& state) {
  std::vector<GeoPoint> ring;
  for (int k = 0; k < state.range(0); ++k) {
    const double a = 6.283185307179586 * k / static_cast<double>(state.range(0));
    ring.push_back(GeoPoint{10.0 * std::sin(a), 10.0 * std::cos(a)});
  }
  const GeoPolygon poly = GeoPolygon::from_vertices(ring, "bench");
  Rng rng(3);
  for (auto _ : state) {
    const GeoPoint p = make_geo_point(rng.uniform(-15, 15), rng.uniform(-15, 15));
    benchmark::DoNotOptimize(poly.contains(p));
  }
}
BENCHMARK(BM_PolygonContains)->Arg(8)->Arg(64);
