#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nightwatch/ais.hpp"
#include "nightwatch/classifier.hpp"
#include "nightwatch/correlate.hpp"
#include "nightwatch/geofence.hpp"
#include "nightwatch/raster.hpp"
#include "nightwatch/stage1.hpp"
#include "nightwatch/stage2.hpp"

namespace nightwatch {

struct PipelineConfig {
  Stage1Params stage1;
  Stage2Config stage2;
  std::string model_path;  // empty: stage 3 passes through at confidence 1.0
  double confidence_threshold = 0.95;
  GateParams gate;
  std::string infrastructure_path;  // empty: geofence disabled
  int crop_size = 9;
  std::string output_dir;  // crops land under <output_dir>/crops; empty skips crop files
  int worker_count = 1;
  int64_t max_frame_age_ms = 21'600'000;  // 6 h

  /// Parse the config JSON (schema in README). Validates thresholds and, for
  /// every referenced file, existence at load time. Relative paths resolve
  /// against the config file's directory.
  static PipelineConfig from_json_file(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text, const std::string& base_dir);
};

struct StageTimingsMs {
  double stage1 = 0.0;
  double stage2 = 0.0;
  double stage3 = 0.0;
  double geofence = 0.0;
  double correlate = 0.0;
  double crop = 0.0;
  double total = 0.0;
};

/// One record per stage-1 candidate: kept detections plus audit records for
/// every suppressed/rejected candidate. kept <=> flags empty and confidence
/// >= threshold.
struct DetectionRecord {
  std::string detection_id;
  std::string frame_id;
  std::string status;  // kept | suppressed | rejected | geofenced
  GeoPoint geo;
  int row = 0;
  int col = 0;
  float peak_radiance = 0.0f;
  float prominence = 0.0f;
  float local_background = 0.0f;
  float snr = 0.0f;
  double confidence = 0.0;
  std::vector<std::string> flags;         // rule names; INFRASTRUCTURE:<kind> for geofence
  std::vector<std::string> flag_details;  // parallel to flags
  std::optional<std::string> correlated_mmsi;
  std::optional<double> correlation_distance_m;
  std::string crop_path;
  int64_t acquired_at_ms = 0;
  StageTimingsMs timings;

  bool kept() const { return status == "kept"; }

  std::string to_jsonl() const;
  static DetectionRecord from_jsonl(const std::string& line);
};

struct FrameResult {
  std::string frame_id;
  std::vector<DetectionRecord> records;  // kept first, then audit records
  StageTimingsMs timings;
  int kept_count = 0;
  int suppressed_count = 0;
  int rejected_count = 0;
  int geofenced_count = 0;
};

/// Immutable shared pipeline state (model, infrastructure index, config);
/// process_frame is safe to call concurrently on distinct frames.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  /// stage1 -> stage2 -> stage3 -> geofence -> correlate -> crops.
  /// Deterministic given (frame, ais snapshot) apart from the timing fields.
  FrameResult process_frame(const RasterFrame& frame, const std::vector<AisTrack>& ais) const;

  const PipelineConfig& config() const { return config_; }
  bool has_model() const { return model_.has_value(); }

 private:
  PipelineConfig config_;
  std::optional<ClassifierModel> model_;
  InfrastructureIndex infrastructure_;
};

}  // namespace nightwatch
