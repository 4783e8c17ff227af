#include <doctest.h>

#include <algorithm>

#include "nightwatch/errors.hpp"
#include "nightwatch/eval.hpp"
#include "nightwatch/rng.hpp"

using namespace nightwatch;

namespace {

std::vector<GeoPoint> grid_points(int count, double spacing_deg) {
  std::vector<GeoPoint> points;
  for (int i = 0; i < count; ++i)
    points.push_back(make_geo_point(10.0 + spacing_deg * (i / 8), -40.0 + spacing_deg * (i % 8)));
  return points;
}

}  // namespace

TEST_CASE("score: perfect predictions") {
  const auto truth = grid_points(16, 0.1);
  const ScoreReport r = score(truth, truth, 1500.0);
  CHECK(r.true_positives == 16);
  CHECK(r.false_positives == 0);
  CHECK(r.false_negatives == 0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
}

TEST_CASE("score: half of truth predicted exactly") {
  const auto truth = grid_points(16, 0.1);
  const std::vector<GeoPoint> half(truth.begin(), truth.begin() + 8);
  const ScoreReport r = score(half, truth, 1500.0);
  CHECK(r.recall == 0.5);
  CHECK(r.precision == 1.0);
  CHECK(r.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("score: everything displaced beyond the radius") {
  const auto truth = grid_points(8, 0.1);
  std::vector<GeoPoint> shifted;
  for (const auto& p : truth) shifted.push_back(make_geo_point(p.lat_deg + 0.05, p.lon_deg));
  const ScoreReport r = score(shifted, truth, 1500.0);  // 0.05 deg ~ 5.6 km
  CHECK(r.true_positives == 0);
  CHECK(r.f1 == 0.0);
}

TEST_CASE("score: one-to-one matching forbids double counting") {
  const GeoPoint t = make_geo_point(0, 0);
  const std::vector<GeoPoint> preds = {make_geo_point(0.001, 0), make_geo_point(-0.001, 0)};
  const ScoreReport r = score(preds, {t}, 1500.0);
  CHECK(r.true_positives == 1);
  CHECK(r.false_positives == 1);
  CHECK(r.false_negatives == 0);
}

TEST_CASE("score: empty inputs use the zero conventions") {
  const ScoreReport none = score({}, {}, 1000.0);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);
  const ScoreReport no_preds = score({}, grid_points(4, 0.1), 1000.0);
  CHECK(no_preds.false_negatives == 4);
  CHECK(no_preds.recall == 0.0);
  const ScoreReport no_truth = score(grid_points(4, 0.1), {}, 1000.0);
  CHECK(no_truth.false_positives == 4);
  CHECK(no_truth.precision == 0.0);
  CHECK_THROWS_AS(score({}, {}, 0.0), ConfigError);
}

TEST_CASE("score: invariant under input order permutations") {
  Rng rng(11);
  auto truth = grid_points(12, 0.08);
  std::vector<GeoPoint> preds;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (i % 3 == 0) continue;  // drop a third
    preds.push_back(make_geo_point(truth[i].lat_deg + rng.uniform(-0.004, 0.004),
                                   truth[i].lon_deg + rng.uniform(-0.004, 0.004)));
  }
  const ScoreReport base = score(preds, truth, 1500.0);
  for (int trial = 0; trial < 5; ++trial) {
    auto p2 = preds;
    auto t2 = truth;
    for (size_t i = p2.size(); i > 1; --i)
      std::swap(p2[i - 1], p2[static_cast<size_t>(rng.next_below(i))]);
    for (size_t i = t2.size(); i > 1; --i)
      std::swap(t2[i - 1], t2[static_cast<size_t>(rng.next_below(i))]);
    const ScoreReport r = score(p2, t2, 1500.0);
    CHECK(r.true_positives == base.true_positives);
    CHECK(r.false_positives == base.false_positives);
    CHECK(r.false_negatives == base.false_negatives);
  }
}

TEST_CASE("score: enlarging the radius never decreases true positives") {
  Rng rng(13);
  const auto truth = grid_points(10, 0.05);
  std::vector<GeoPoint> preds;
  for (const auto& t : truth)
    preds.push_back(make_geo_point(t.lat_deg + rng.uniform(-0.02, 0.02),
                                   t.lon_deg + rng.uniform(-0.02, 0.02)));
  int64_t prev = 0;
  for (double radius : {100.0, 500.0, 1000.0, 2000.0, 5000.0}) {
    const ScoreReport r = score(preds, truth, radius);
    CHECK(r.true_positives >= prev);
    CHECK(r.true_positives <= static_cast<int64_t>(std::min(preds.size(), truth.size())));
    prev = r.true_positives;
  }
}

TEST_CASE("merge adds counts and recomputes rates") {
  const ScoreReport a = finalize_counts(8, 2, 0);
  const ScoreReport b = finalize_counts(2, 0, 6);
  const ScoreReport m = merge(a, b);
  CHECK(m.true_positives == 10);
  CHECK(m.false_positives == 2);
  CHECK(m.false_negatives == 6);
  CHECK(m.precision == doctest::Approx(10.0 / 12.0));
  CHECK(m.recall == doctest::Approx(10.0 / 16.0));
}
