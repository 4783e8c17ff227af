#include "nightwatch/eval.hpp"

#include "nightwatch/assignment.hpp"
#include "nightwatch/errors.hpp"

namespace nightwatch {

ScoreReport finalize_counts(int64_t tp, int64_t fp, int64_t fn) {
  ScoreReport r;
  r.true_positives = tp;
  r.false_positives = fp;
  r.false_negatives = fn;
  r.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

ScoreReport score(const std::vector<GeoPoint>& predictions, const std::vector<GeoPoint>& truth,
                  double match_radius_m) {
  if (!(match_radius_m > 0.0)) throw ConfigError("match_radius_m must be > 0");
  CostMatrix costs(static_cast<int>(predictions.size()), static_cast<int>(truth.size()));
  for (size_t i = 0; i < predictions.size(); ++i) {
    for (size_t j = 0; j < truth.size(); ++j) {
      const double d = haversine_m(predictions[i], truth[j]);
      if (d <= match_radius_m) costs.set(static_cast<int>(i), static_cast<int>(j), d);
    }
  }
  const Assignment assignment = solve_lap(costs);
  const auto tp = static_cast<int64_t>(assignment.pairs.size());
  return finalize_counts(tp, static_cast<int64_t>(predictions.size()) - tp,
                         static_cast<int64_t>(truth.size()) - tp);
}

ScoreReport merge(const ScoreReport& a, const ScoreReport& b) {
  return finalize_counts(a.true_positives + b.true_positives,
                         a.false_positives + b.false_positives,
                         a.false_negatives + b.false_negatives);
}

}  // namespace nightwatch
