#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "nightwatch/pipeline.hpp"

namespace nightwatch {

struct ServiceConfig {
  PipelineConfig pipeline;
  std::string data_dir;   // spool, markers, detection logs, crops
  std::string inbox_dir;  // optional: watched for frame containers
  std::string ais_path;   // optional AIS JSONL, reloaded when the file changes
  int http_port = 8080;   // 0 picks an ephemeral port
  int poll_interval_ms = 200;
  int queue_capacity = 64;

  static ServiceConfig from_json_file(const std::string& path);
  static ServiceConfig from_json_text(const std::string& text, const std::string& base_dir);
};

enum class FrameState { Queued, Processing, Done, Failed };
const char* to_string(FrameState state);

struct ServiceCounters {
  uint64_t frames_received = 0;
  uint64_t frames_processed = 0;
  uint64_t frames_failed = 0;
  uint64_t frames_deduplicated = 0;
  uint64_t frames_recovered = 0;
  uint64_t frames_stale = 0;
  uint64_t detections_kept = 0;
  uint64_t candidates_suppressed = 0;
  uint64_t candidates_rejected = 0;
  uint64_t candidates_geofenced = 0;
  double stage1_ms = 0, stage2_ms = 0, stage3_ms = 0;
  double geofence_ms = 0, correlate_ms = 0, crop_ms = 0, total_ms = 0;
};

/// Streaming orchestration: ingest frames from an inbox directory and HTTP
/// uploads, run the pipeline with bounded worker concurrency, persist
/// detection records and completion markers, and serve queries.
///
/// Persistence layout under data_dir:
///   spool/<frame_id>.json|.planes          admitted containers
///   frames/<frame_id>.done                 completion marker (done/failed)
///   frames/<frame_id>.detections.jsonl     per-frame records
///   detections.jsonl                       global append-only log
///   crops/<frame_id>/…                     kept-detection crops
///
/// Exactly-once per frame_id: duplicates are acknowledged but never
/// reprocessed. On restart, spooled frames without a completion marker are
/// re-enqueued; everything else is left alone.
class VesselService {
 public:
  explicit VesselService(ServiceConfig config);
  ~VesselService();

  VesselService(const VesselService&) = delete;
  VesselService& operator=(const VesselService&) = delete;

  /// Recover state, start workers + watcher + HTTP listener. Returns once
  /// the HTTP socket is bound.
  void start();
  void stop();

  int http_port() const { return bound_port_; }
  ServiceCounters counters() const;

  /// Block until the work queue drains and all workers go idle.
  bool wait_idle(int timeout_ms) const;

  /// Frame states for tests and the inspect command.
  std::map<std::string, FrameState> frame_states() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int bound_port_ = 0;
};

}  // namespace nightwatch
