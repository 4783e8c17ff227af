#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "nightwatch/ais.hpp"
#include "nightwatch/correlate.hpp"
#include "nightwatch/errors.hpp"
#include "nightwatch/synth.hpp"
#include "oracles/test_support.hpp"

using namespace nightwatch;

namespace {

AisPosition report(const std::string& id, int64_t ts, double lat, double lon) {
  AisPosition p;
  p.vessel_id = id;
  p.ts_ms = ts;
  p.geo = make_geo_point(lat, lon);
  return p;
}

}  // namespace

TEST_CASE("interpolate_track: exact report time, midpoint, extrapolation gate") {
  AisTrack track;
  track.vessel_id = "v1";
  track.reports = {report("v1", 1000, 0, 0), report("v1", 3000, 0, 2)};

  const auto at_report = interpolate_track(track, 1000, 0);
  REQUIRE(at_report);
  CHECK(at_report->geo.lat_deg == 0.0);
  CHECK(at_report->geo.lon_deg == 0.0);
  CHECK(at_report->nearest_report_offset_ms == 0);

  const auto mid = interpolate_track(track, 2000, 0);
  REQUIRE(mid);
  CHECK(mid->geo.lon_deg == doctest::Approx(1.0));
  CHECK(mid->nearest_report_offset_ms == 1000);

  // Before/after the span: clamped within the window, absent beyond it.
  const auto before = interpolate_track(track, 500, 1000);
  REQUIRE(before);
  CHECK(before->geo.lon_deg == 0.0);
  CHECK(before->nearest_report_offset_ms == 500);
  const auto after = interpolate_track(track, 3800, 1000);
  REQUIRE(after);
  CHECK(after->geo.lon_deg == 2.0);
  CHECK_FALSE(interpolate_track(track, 4001, 1000));
  CHECK_FALSE(interpolate_track(track, 0, 999));

  AisTrack unsorted = track;
  std::swap(unsorted.reports[0], unsorted.reports[1]);
  CHECK_THROWS_AS(interpolate_track(unsorted, 2000, 0), Error);

  AisTrack empty;
  CHECK_FALSE(interpolate_track(empty, 2000, 0));
}

TEST_CASE("interpolate_track: antimeridian-crossing leg") {
  AisTrack track;
  track.vessel_id = "v1";
  track.reports = {report("v1", 0, 0, 179.5), report("v1", 2000, 0, -179.5)};
  const auto mid = interpolate_track(track, 1000, 0);
  REQUIRE(mid);
  CHECK(std::abs(mid->geo.lon_deg) == doctest::Approx(180.0));
}

TEST_CASE("build_cost_matrix: gating on haversine distance") {
  std::vector<DetectionPoint> dets = {{"d0", make_geo_point(0, 0)}};

  SUBCASE("coincident positions cost zero") {
    const CostMatrix costs = build_cost_matrix(dets, {make_geo_point(0, 0)}, 1000.0);
    CHECK(costs.at(0, 0) == 0.0);
  }
  SUBCASE("everything beyond the gate is forbidden") {
    const CostMatrix costs = build_cost_matrix(dets, {make_geo_point(0, 2)}, 1000.0);
    CHECK(costs.is_forbidden(0, 0));
  }
  SUBCASE("one equatorial degree inside a 120 km gate") {
    const CostMatrix costs = build_cost_matrix(dets, {make_geo_point(0, 1)}, 120000.0);
    CHECK(costs.at(0, 0) == doctest::Approx(111195.08).epsilon(0.5 / 111195.08));
  }
  CHECK_THROWS_AS(build_cost_matrix(dets, {}, 0.0), ConfigError);
}

TEST_CASE("correlate: degenerate inputs") {
  const GateParams gate;
  AisTrack track;
  track.vessel_id = "a1";
  track.reports = {report("a1", 1000, 10, 10)};

  SUBCASE("no detections: every track unmatched") {
    const auto result = correlate({}, {track}, 1000, gate);
    CHECK(result.matches.empty());
    CHECK(result.dark_detections.empty());
    CHECK(result.unmatched_ais == std::vector<std::string>{"a1"});
  }
  SUBCASE("no AIS in gate: detection is dark") {
    const auto result = correlate({{"d0", make_geo_point(20, 20)}}, {track}, 1000, gate);
    CHECK(result.matches.empty());
    CHECK(result.dark_detections == std::vector<std::string>{"d0"});
  }
  SUBCASE("track too stale for the frame is unusable") {
    const auto result =
        correlate({{"d0", make_geo_point(10, 10)}}, {track}, 1000 + gate.max_extrapolation_ms + 1,
                  gate);
    CHECK(result.matches.empty());
    CHECK(result.dark_detections == std::vector<std::string>{"d0"});
  }
}

TEST_CASE("correlate: matched distances respect the per-track gate") {
  GateParams gate;
  gate.base_uncertainty_m = 1500.0;
  gate.max_speed_mps = 10.0;

  // Report 100 s before frame time: gate grows to 2500 m.
  AisTrack track;
  track.vessel_id = "a1";
  track.reports = {report("a1", 0, 0, 0)};
  const double two_km_deg = 2000.0 / 111194.92664455873;
  const auto result =
      correlate({{"d0", make_geo_point(two_km_deg, 0)}}, {track}, 100000, gate);
  REQUIRE(result.matches.size() == 1);
  CHECK(result.matches[0].distance_m <= 1500.0 + 10.0 * 100.0);

  // Same geometry with a fresh report: 2 km exceeds the 1.5 km base gate.
  track.reports[0].ts_ms = 100000;
  const auto tight = correlate({{"d0", make_geo_point(two_km_deg, 0)}}, {track}, 100000, gate);
  CHECK(tight.matches.empty());
}

TEST_CASE("correlate: synthetic scenario matches every broadcasting vessel") {
  SceneSpec spec;
  spec.seed = 4242;
  spec.width = spec.height = 512;
  spec.vessel_count = 14;
  spec.placement_margin_px = 32;
  auto [frame, truth] = generate_frame(spec);
  const auto ais = generate_ais(truth, 200.0, 0.3, 99);
  const auto tracks = build_tracks(ais);

  // Detections at the exact truth positions (pipeline accuracy tested
  // elsewhere; this isolates the matching).
  std::vector<DetectionPoint> dets;
  for (const auto& v : truth.of_kind(TruthKind::Vessel)) dets.push_back({v.id, v.geo});

  const auto result = correlate(dets, tracks, truth.acquired_at_ms, GateParams{});
  CHECK(result.matches.size() == tracks.size());  // every broadcaster matched
  for (const auto& m : result.matches) {
    CHECK(m.detection_id == m.vessel_id);  // synth uses truth ids as MMSIs
    CHECK(m.distance_m <= 200.0 + 1e-6);
  }
  CHECK(result.dark_detections.size() == dets.size() - tracks.size());
  CHECK(result.unmatched_ais.empty());
}

TEST_CASE("correlate: far-away track changes only unmatched_ais") {
  std::vector<DetectionPoint> dets = {{"d0", make_geo_point(0, 0)}};
  AisTrack near;
  near.vessel_id = "near";
  near.reports = {report("near", 1000, 0.001, 0)};
  AisTrack far;
  far.vessel_id = "far";
  far.reports = {report("far", 1000, 40, 40)};

  const auto base = correlate(dets, {near}, 1000, GateParams{});
  const auto with_far = correlate(dets, {near, far}, 1000, GateParams{});
  REQUIRE(base.matches.size() == 1);
  REQUIRE(with_far.matches.size() == 1);
  CHECK(base.matches[0].vessel_id == with_far.matches[0].vessel_id);
  CHECK(base.matches[0].distance_m == with_far.matches[0].distance_m);
  CHECK(with_far.unmatched_ais == std::vector<std::string>{"far"});
}

TEST_CASE("correlate: shrinking the gate never increases matches") {
  SceneSpec spec;
  spec.seed = 555;
  spec.width = spec.height = 384;
  spec.vessel_count = 10;
  spec.placement_margin_px = 24;
  auto [frame, truth] = generate_frame(spec);
  const auto tracks = build_tracks(generate_ais(truth, 400.0, 0.0, 7));
  std::vector<DetectionPoint> dets;
  for (const auto& v : truth.of_kind(TruthKind::Vessel)) dets.push_back({v.id, v.geo});

  size_t prev = dets.size() + 1;
  for (double base_m : {2000.0, 800.0, 300.0, 100.0, 10.0}) {
    GateParams gate;
    gate.base_uncertainty_m = base_m;
    const auto result = correlate(dets, tracks, truth.acquired_at_ms, gate);
    CHECK(result.matches.size() <= prev);
    prev = result.matches.size();
  }
}

TEST_CASE("AIS JSONL round trip and error reporting") {
  testsup::TempDir dir("ais");
  std::vector<AisPosition> reports;
  AisPosition a = report("900123456", 1700000000000, 12.5, -44.25);
  a.sog_mps = 5.1444444444444448;  // 10 knots
  a.cog_deg = 270.0;
  reports.push_back(a);
  reports.push_back(report("900000001", 1700000030000, -3.25, 100.0));

  const std::string path = dir.str("reports.jsonl");
  save_ais_jsonl(reports, path);
  const auto loaded = load_ais_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].vessel_id == "900123456");
  CHECK(loaded[0].ts_ms == 1700000000000);
  CHECK(loaded[0].geo.lat_deg == 12.5);
  REQUIRE(loaded[0].sog_mps);
  CHECK(*loaded[0].sog_mps == doctest::Approx(5.144444444));
  CHECK(loaded[1].cog_deg == std::nullopt);

  {
    std::ofstream bad(dir.str("bad.jsonl"));
    bad << R"({"mmsi":"1","ts":"2023-11-14T22:13:20Z","lat":0,"lon":0})" << "\n";
    bad << R"({"mmsi":"2","lat":0,"lon":0})" << "\n";  // missing ts
  }
  CHECK_THROWS_WITH_AS(load_ais_jsonl(dir.str("bad.jsonl")), doctest::Contains(":2:"),
                       FormatError);
}

TEST_CASE("build_tracks groups and sorts reports") {
  std::vector<AisPosition> reports = {
      report("b", 3000, 1, 1),
      report("a", 2000, 0, 0),
      report("b", 1000, 2, 2),
      report("a", 500, 3, 3),
  };
  const auto tracks = build_tracks(reports);
  REQUIRE(tracks.size() == 2);
  CHECK(tracks[0].vessel_id == "b");  // first-appearance order
  CHECK(tracks[0].reports[0].ts_ms == 1000);
  CHECK(tracks[0].reports[1].ts_ms == 3000);
  CHECK(tracks[1].vessel_id == "a");
  CHECK(tracks[1].reports[0].ts_ms == 500);
}
