#include "nightwatch/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <unordered_map>

#include "nightwatch/errors.hpp"

namespace nightwatch {

namespace {

constexpr double kMadToSigma = 1.4826022185056018;  // 1 / Phi^-1(3/4)
constexpr float kSnrCap = 1e9f;                     // degenerate zero-noise frames

double median_inplace(std::vector<float>& v) {
  const size_t n = v.size();
  const size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const float hi = v[mid];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (static_cast<double>(v[mid - 1]) + hi);
}

void validate_params(const Stage1Params& p) {
  if (p.ring_inner < 1 || p.ring_outer <= p.ring_inner)
    throw ConfigError("stage1 ring must satisfy ring_outer > ring_inner >= 1");
  if (p.nms_window < 1 || p.nms_window % 2 == 0)
    throw ConfigError("stage1 nms_window must be odd and >= 1");
  if (!(p.prominence_threshold >= 0.0))
    throw ConfigError("stage1 prominence_threshold must be >= 0");
}

// Local maximum with deterministic plateau handling: strictly greater than
// 3x3 neighbors earlier in row-major order, greater-or-equal to later ones,
// so exactly one pixel of a tied plateau qualifies. NaN and out-of-frame
// neighbors never disqualify.
bool is_local_max(const std::vector<float>& rad, int width, int height, int r, int c) {
  const float v = rad[static_cast<size_t>(r) * width + c];
  for (int dr = -1; dr <= 1; ++dr) {
    const int rr = r + dr;
    if (rr < 0 || rr >= height) continue;
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const int cc = c + dc;
      if (cc < 0 || cc >= width) continue;
      const float nv = rad[static_cast<size_t>(rr) * width + cc];
      if (std::isnan(nv)) continue;
      const bool earlier = dr < 0 || (dr == 0 && dc < 0);
      if (earlier ? nv >= v : nv > v) return false;
    }
  }
  return true;
}

struct RawCandidate {
  int row, col;
  float peak, prominence, background;
};

void scan_rows(const std::vector<float>& rad, int width, int height, int row_begin, int row_end,
               const Stage1Params& p, std::vector<RawCandidate>& out) {
  const int ri = p.ring_inner;
  const int ro = p.ring_outer;
  const int nominal_ring = (2 * ro + 1) * (2 * ro + 1) - (2 * ri + 1) * (2 * ri + 1);
  std::vector<float> ring;
  ring.reserve(static_cast<size_t>(nominal_ring));

  for (int r = row_begin; r < row_end; ++r) {
    for (int c = 0; c < width; ++c) {
      const float v = rad[static_cast<size_t>(r) * width + c];
      if (std::isnan(v)) continue;
      if (!is_local_max(rad, width, height, r, c)) continue;

      ring.clear();
      for (int dr = -ro; dr <= ro; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= height) continue;
        for (int dc = -ro; dc <= ro; ++dc) {
          if (std::max(std::abs(dr), std::abs(dc)) <= ri) continue;
          const int cc = c + dc;
          if (cc < 0 || cc >= width) continue;
          const float rv = rad[static_cast<size_t>(rr) * width + cc];
          if (!std::isnan(rv)) ring.push_back(rv);
        }
      }
      // Out-of-frame cells count as missing, same as NaN: a ring with less
      // than half its nominal support cannot establish a background.
      if (ring.size() * 2 < static_cast<size_t>(nominal_ring)) continue;

      // Median pre-gate: once n/2+1 ring values sit at or above
      // v - threshold, both middle order statistics do too, so the median
      // cannot leave prominence above the threshold. Skips the selection for
      // the vast majority of noise maxima without changing any result.
      const double gate = static_cast<double>(v) - p.prominence_threshold;
      const size_t skip_count = ring.size() / 2 + 1;
      size_t at_or_above = 0;
      for (float rv : ring) {
        if (static_cast<double>(rv) >= gate && ++at_or_above >= skip_count) break;
      }
      if (at_or_above >= skip_count) continue;

      const double background = median_inplace(ring);
      const double prominence = static_cast<double>(v) - background;
      if (prominence > p.prominence_threshold)
        out.push_back(RawCandidate{r, c, v, static_cast<float>(prominence),
                                   static_cast<float>(background)});
    }
  }
}

}  // namespace

double estimate_noise_sigma(const RasterFrame& frame, Stage1Params::SigmaEstimator estimator) {
  const auto& rad = frame.plane(kChannelRadiance);
  const int land_idx = frame.channel_index(kChannelLandMask);
  std::vector<float> water;
  water.reserve(rad.size());
  for (size_t i = 0; i < rad.size(); ++i) {
    if (std::isnan(rad[i])) continue;
    if (land_idx >= 0 && frame.planes[static_cast<size_t>(land_idx)][i] > 0.5f) continue;
    water.push_back(rad[i]);
  }
  if (water.empty()) return 0.0;

  if (estimator == Stage1Params::SigmaEstimator::Stddev) {
    double mean = 0.0;
    for (float v : water) mean += v;
    mean /= static_cast<double>(water.size());
    double ss = 0.0;
    for (float v : water) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(water.size()));
  }

  const double med = median_inplace(water);
  for (float& v : water) v = std::abs(v - static_cast<float>(med));
  return kMadToSigma * median_inplace(water);
}

std::vector<LightCandidate> detect_light_sources(const RasterFrame& frame,
                                                 const Stage1Params& params, int worker_threads) {
  validate_params(params);
  const auto& rad = frame.plane(kChannelRadiance);
  const int min_dim = 2 * params.ring_outer + 1;
  if (frame.width < min_dim || frame.height < min_dim)
    throw ConfigError("frame " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                      " smaller than stage1 kernel support (" + std::to_string(min_dim) + ")");

  const double sigma = estimate_noise_sigma(frame, params.sigma_estimator);

  std::vector<RawCandidate> raw;
  const int threads = std::max(1, worker_threads);
  if (threads == 1 || frame.height < 4 * threads) {
    scan_rows(rad, frame.width, frame.height, 0, frame.height, params, raw);
  } else {
    // Row bands over the shared read-only plane; band outputs concatenate in
    // band order, which equals the sequential row-major order.
    std::vector<std::vector<RawCandidate>> partial(static_cast<size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    const int band = (frame.height + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * band;
      const int hi = std::min(frame.height, lo + band);
      if (lo >= hi) break;
      pool.emplace_back([&, t, lo, hi] {
        scan_rows(rad, frame.width, frame.height, lo, hi, params, partial[static_cast<size_t>(t)]);
      });
    }
    for (auto& th : pool) th.join();
    for (auto& part : partial)
      raw.insert(raw.end(), part.begin(), part.end());
  }

  // Non-maximum suppression: brightest candidate wins its window; ties break
  // to prominence, then row-major position. Kept candidates are bucketed on a
  // grid of cell size radius+1 so each test only scans 3x3 adjacent cells.
  std::vector<size_t> order(raw.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (raw[a].peak != raw[b].peak) return raw[a].peak > raw[b].peak;
    if (raw[a].prominence != raw[b].prominence) return raw[a].prominence > raw[b].prominence;
    if (raw[a].row != raw[b].row) return raw[a].row < raw[b].row;
    return raw[a].col < raw[b].col;
  });
  const int radius = params.nms_window / 2;
  const int cell = radius + 1;
  const int grid_cols = frame.width / cell + 2;
  std::unordered_map<int64_t, std::vector<size_t>> buckets;
  std::vector<size_t> kept;
  for (size_t idx : order) {
    const int br = raw[idx].row / cell;
    const int bc = raw[idx].col / cell;
    bool shadowed = false;
    for (int dr = -1; dr <= 1 && !shadowed; ++dr) {
      for (int dc = -1; dc <= 1 && !shadowed; ++dc) {
        const auto it = buckets.find(static_cast<int64_t>(br + dr) * grid_cols + (bc + dc));
        if (it == buckets.end()) continue;
        for (size_t k : it->second) {
          if (std::abs(raw[idx].row - raw[k].row) <= radius &&
              std::abs(raw[idx].col - raw[k].col) <= radius) {
            shadowed = true;
            break;
          }
        }
      }
    }
    if (!shadowed) {
      kept.push_back(idx);
      buckets[static_cast<int64_t>(br) * grid_cols + bc].push_back(idx);
    }
  }
  std::sort(kept.begin(), kept.end(), [&](size_t a, size_t b) {
    if (raw[a].row != raw[b].row) return raw[a].row < raw[b].row;
    return raw[a].col < raw[b].col;
  });

  std::vector<LightCandidate> result;
  result.reserve(kept.size());
  for (size_t idx : kept) {
    const auto& rc = raw[idx];
    LightCandidate cand;
    cand.row = rc.row;
    cand.col = rc.col;
    cand.geo = pixel_to_geo(frame, rc.row, rc.col);
    cand.peak_radiance = rc.peak;
    cand.prominence = rc.prominence;
    cand.local_background = rc.background;
    cand.snr = sigma > 0.0 ? std::min(kSnrCap, static_cast<float>(rc.prominence / sigma)) : kSnrCap;
    result.push_back(cand);
  }
  return result;
}

}  // namespace nightwatch
