#pragma once

#include <vector>

#include "nightwatch/geo.hpp"
#include "nightwatch/raster.hpp"

namespace nightwatch {

/// Parameters of the stage-one spike kernel: a pixel is a candidate when its
/// value exceeds the median of a square annulus (Chebyshev radius in
/// (ring_inner, ring_outer]) by more than prominence_threshold, and survives
/// non-maximum suppression keeping the brightest candidate per nms_window.
struct Stage1Params {
  int ring_inner = 2;   // excludes the 1-2 px vessel point-spread
  int ring_outer = 5;
  double prominence_threshold = 10.0;  // nanowatts, tuned per deployment
  int nms_window = 3;                  // odd
  enum class SigmaEstimator { MAD, Stddev };
  SigmaEstimator sigma_estimator = SigmaEstimator::MAD;
};

/// A point light source extracted from the radiance plane.
struct LightCandidate {
  int row = 0;
  int col = 0;
  GeoPoint geo;
  float peak_radiance = 0.0f;
  float prominence = 0.0f;        // peak minus ring-median background
  float local_background = 0.0f;  // ring median
  float snr = 0.0f;               // prominence / frame noise sigma
};

/// Robust noise scale of the radiance plane, estimated over water pixels
/// (all pixels when no land mask is present). NaNs ignored.
double estimate_noise_sigma(const RasterFrame& frame, Stage1Params::SigmaEstimator estimator);

/// Extract all point light sources. Deterministic; worker_threads > 1 tiles
/// the frame by row bands and produces results identical to the sequential
/// evaluation. Throws when the frame lacks a radiance channel or is smaller
/// than 2*ring_outer+1 in either dimension.
std::vector<LightCandidate> detect_light_sources(const RasterFrame& frame,
                                                 const Stage1Params& params,
                                                 int worker_threads = 1);

}  // namespace nightwatch
