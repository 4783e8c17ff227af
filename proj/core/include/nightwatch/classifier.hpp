#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nightwatch/raster.hpp"
#include "nightwatch/stage1.hpp"

namespace nightwatch {

/// Fixed inference-only architecture: {conv 3x3, stride 1, zero padding,
/// ReLU} x N (N <= 4) -> global average pool -> dense -> logistic. Runs on
/// CPU in O(candidates), independent of frame size.
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<float> weights;  // [out][in][3][3]
  std::vector<float> bias;     // [out]
};

struct ClassifierModel {
  int input_size = 9;  // odd crop edge length
  std::vector<std::string> input_channels;  // registry order
  std::vector<ConvLayer> conv_layers;
  std::vector<float> dense_weights;  // [last out_channels]
  float dense_bias = 0.0f;
};

/// The channel order every model consumes.
const std::vector<std::string>& classifier_channel_registry();

/// Validate architecture/weight-shape consistency. Throws on violations.
void validate_model(const ClassifierModel& model);

/// Model container: `<base>.json` descriptor + `<base>.weights` little-endian
/// float32 blob, FNV-1a 64 checksum of the blob recorded in the descriptor.
void save_model(const ClassifierModel& model, const std::string& path);

/// Load and validate; throws FormatError on shape mismatch, unsupported layer
/// kind, unknown channel set, or checksum mismatch.
ClassifierModel load_model(const std::string& path);

/// Forward pass over a crop whose channels match the registry order and whose
/// size equals model.input_size. Deterministic; returns probability in [0,1].
double classify(const ClassifierModel& model, const Crop& crop);

struct ClassifiedCandidate {
  LightCandidate candidate;
  double confidence = 0.0;
};

struct Stage3Result {
  std::vector<ClassifiedCandidate> accepted;  // confidence >= threshold
  std::vector<ClassifiedCandidate> rejected;  // retained for audit
};

/// Crop around each candidate (registry channels, fill 0) and keep those the
/// model scores at or above threshold.
Stage3Result filter_detections(const std::vector<LightCandidate>& cands, const RasterFrame& frame,
                               const ClassifierModel& model, double threshold);

/// Deterministic random-weight model for tests and integration plumbing.
ClassifierModel make_random_model(uint64_t seed, int conv_layers, int hidden_channels,
                                  int input_size = 9);

/// Scene-calibrated contrast model: a single center-surround convolution over
/// the radiance channel with a dense stage calibrated (by forwarding two
/// probe crops) so a flat background at `background_nw` scores well below
/// 0.5 and a center spike of `min_prominence_nw` scores above 0.99. Suitable
/// for synthetic scenes; real deployments import trained weights instead.
ClassifierModel make_demo_model(double background_nw = 8.0, double min_prominence_nw = 20.0,
                                int input_size = 9);

uint64_t fnv1a64(const void* data, size_t bytes);

}  // namespace nightwatch
