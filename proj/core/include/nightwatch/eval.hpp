#pragma once

#include <cstdint>
#include <vector>

#include "nightwatch/geo.hpp"

namespace nightwatch {

struct ScoreReport {
  int64_t true_positives = 0;
  int64_t false_positives = 0;
  int64_t false_negatives = 0;
  double precision = 0.0;  // TP/(TP+FP), 0 when denominator 0
  double recall = 0.0;     // TP/(TP+FN), 0 when denominator 0
  double f1 = 0.0;         // harmonic mean, 0 when P+R == 0
};

/// Recompute precision/recall/F1 from the counts.
ScoreReport finalize_counts(int64_t tp, int64_t fp, int64_t fn);

/// Distance-matched one-to-one scoring: optimal (LAP) matching over
/// haversine costs gated at match_radius_m. TP = matched pairs, FP =
/// unmatched predictions, FN = unmatched truth.
ScoreReport score(const std::vector<GeoPoint>& predictions, const std::vector<GeoPoint>& truth,
                  double match_radius_m);

/// Per-frame reports merge by count addition.
ScoreReport merge(const ScoreReport& a, const ScoreReport& b);

}  // namespace nightwatch
