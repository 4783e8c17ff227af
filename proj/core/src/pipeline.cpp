#include "nightwatch/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "nightwatch/errors.hpp"
#include "nightwatch/timeutil.hpp"

namespace nightwatch {

namespace fs = std::filesystem;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  if (path.empty() || base_dir.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).string();
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError(what + " does not exist: " + path);
}

void check_unit_interval(double v, const std::string& name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(name + " must be in [0,1]");
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text,
                                              const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  PipelineConfig cfg;
  try {
    if (j.contains("stage1")) {
      const auto& s1 = j["stage1"];
      cfg.stage1.ring_inner = s1.value("ring_inner", cfg.stage1.ring_inner);
      cfg.stage1.ring_outer = s1.value("ring_outer", cfg.stage1.ring_outer);
      cfg.stage1.prominence_threshold =
          s1.value("prominence_threshold", cfg.stage1.prominence_threshold);
      cfg.stage1.nms_window = s1.value("nms_window", cfg.stage1.nms_window);
      const std::string est = s1.value("sigma_estimator", std::string("mad"));
      if (est == "mad")
        cfg.stage1.sigma_estimator = Stage1Params::SigmaEstimator::MAD;
      else if (est == "stddev")
        cfg.stage1.sigma_estimator = Stage1Params::SigmaEstimator::Stddev;
      else
        throw ConfigError("stage1.sigma_estimator must be 'mad' or 'stddev'");
    }
    if (j.contains("stage2")) {
      const auto& s2 = j["stage2"];
      if (s2.contains("gazetteer_path") && !s2["gazetteer_path"].is_null()) {
        const std::string path = resolve_path(base_dir, s2["gazetteer_path"].get<std::string>());
        require_file(path, "stage2.gazetteer_path");
        cfg.stage2.gazetteer = FlareGazetteer::load_jsonl(path);
      }
      if (s2.contains("saa_polygon_path") && !s2["saa_polygon_path"].is_null()) {
        const std::string raw = s2["saa_polygon_path"].get<std::string>();
        if (raw == "default") {
          cfg.stage2.saa_polygon = Stage2Config::default_saa_polygon();
        } else {
          const std::string path = resolve_path(base_dir, raw);
          require_file(path, "stage2.saa_polygon_path");
          cfg.stage2.saa_polygon = GeoPolygon::from_json_file(path);
        }
      }
      cfg.stage2.saa_snr_keep = s2.value("saa_snr_keep", cfg.stage2.saa_snr_keep);
      cfg.stage2.moon_thresh = s2.value("moon_thresh", cfg.stage2.moon_thresh);
      cfg.stage2.cloud_thresh = s2.value("cloud_thresh", cfg.stage2.cloud_thresh);
      cfg.stage2.cloud_snr_keep = s2.value("cloud_snr_keep", cfg.stage2.cloud_snr_keep);
      cfg.stage2.aurora_lat_gate_deg = s2.value("aurora_lat_gate_deg", cfg.stage2.aurora_lat_gate_deg);
      cfg.stage2.aurora_diffuseness_thresh =
          s2.value("aurora_diffuseness_thresh", cfg.stage2.aurora_diffuseness_thresh);
      cfg.stage2.scanline_p_value = s2.value("scanline_p_value", cfg.stage2.scanline_p_value);
      cfg.stage2.noise_smile_margin_px =
          s2.value("noise_smile_margin_px", cfg.stage2.noise_smile_margin_px);
      cfg.stage2.noise_smile_snr_keep =
          s2.value("noise_smile_snr_keep", cfg.stage2.noise_smile_snr_keep);
      check_unit_interval(cfg.stage2.moon_thresh, "stage2.moon_thresh");
      check_unit_interval(cfg.stage2.cloud_thresh, "stage2.cloud_thresh");
      if (!(cfg.stage2.scanline_p_value > 0.0 && cfg.stage2.scanline_p_value <= 1.0))
        throw ConfigError("stage2.scanline_p_value must be in (0,1]");
      if (cfg.stage2.noise_smile_margin_px < 0)
        throw ConfigError("stage2.noise_smile_margin_px must be >= 0");
    }
    if (j.contains("stage3")) {
      const auto& s3 = j["stage3"];
      if (s3.contains("model_path") && !s3["model_path"].is_null()) {
        cfg.model_path = resolve_path(base_dir, s3["model_path"].get<std::string>());
        require_file(cfg.model_path.ends_with(".json") ? cfg.model_path : cfg.model_path + ".json",
                     "stage3.model_path");
      }
      cfg.confidence_threshold = s3.value("confidence_threshold", cfg.confidence_threshold);
      check_unit_interval(cfg.confidence_threshold, "stage3.confidence_threshold");
    }
    if (j.contains("correlation")) {
      const auto& co = j["correlation"];
      cfg.gate.base_uncertainty_m = co.value("base_uncertainty_m", cfg.gate.base_uncertainty_m);
      cfg.gate.max_speed_mps = co.value("max_speed_mps", cfg.gate.max_speed_mps);
      if (co.contains("max_extrapolation_s"))
        cfg.gate.max_extrapolation_ms =
            static_cast<int64_t>(co["max_extrapolation_s"].get<double>() * 1000.0);
      if (!(cfg.gate.base_uncertainty_m > 0.0) || !(cfg.gate.max_speed_mps >= 0.0))
        throw ConfigError("correlation gate parameters out of range");
    }
    if (j.contains("geofence")) {
      const auto& ge = j["geofence"];
      if (ge.contains("infrastructure_path") && !ge["infrastructure_path"].is_null()) {
        cfg.infrastructure_path =
            resolve_path(base_dir, ge["infrastructure_path"].get<std::string>());
        require_file(cfg.infrastructure_path, "geofence.infrastructure_path");
      }
    }
    cfg.crop_size = j.value("crop_size", cfg.crop_size);
    if (cfg.crop_size < 1 || cfg.crop_size % 2 == 0)
      throw ConfigError("crop_size must be odd and >= 1");
    if (j.contains("output_dir")) cfg.output_dir = resolve_path(base_dir, j["output_dir"].get<std::string>());
    cfg.worker_count = j.value("worker_count", cfg.worker_count);
    if (cfg.worker_count < 1 || cfg.worker_count > 64)
      throw ConfigError("worker_count must be in [1,64]");
    if (j.contains("max_frame_age_s"))
      cfg.max_frame_age_ms = static_cast<int64_t>(j["max_frame_age_s"].get<double>() * 1000.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return cfg;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// DetectionRecord JSON
// ---------------------------------------------------------------------------

std::string DetectionRecord::to_jsonl() const {
  nlohmann::json j;
  j["detection_id"] = detection_id;
  j["frame_id"] = frame_id;
  j["status"] = status;
  j["lat"] = geo.lat_deg;
  j["lon"] = geo.lon_deg;
  j["row"] = row;
  j["col"] = col;
  j["peak_radiance"] = peak_radiance;
  j["prominence"] = prominence;
  j["local_background"] = local_background;
  j["snr"] = snr;
  j["confidence"] = confidence;
  j["flags"] = flags;
  j["flag_details"] = flag_details;
  j["correlated_mmsi"] = correlated_mmsi ? nlohmann::json(*correlated_mmsi) : nlohmann::json();
  j["correlation_distance_m"] =
      correlation_distance_m ? nlohmann::json(*correlation_distance_m) : nlohmann::json();
  j["crop_path"] = crop_path;
  j["acquired_at"] = format_iso8601_ms(acquired_at_ms);
  j["timings_ms"] = {{"stage1", timings.stage1},     {"stage2", timings.stage2},
                     {"stage3", timings.stage3},     {"geofence", timings.geofence},
                     {"correlate", timings.correlate}, {"crop", timings.crop},
                     {"total", timings.total}};
  return j.dump();
}

DetectionRecord DetectionRecord::from_jsonl(const std::string& line) {
  DetectionRecord r;
  try {
    const auto j = nlohmann::json::parse(line);
    r.detection_id = j.at("detection_id").get<std::string>();
    r.frame_id = j.at("frame_id").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.geo = make_geo_point(j.at("lat").get<double>(), j.at("lon").get<double>());
    r.row = j.value("row", 0);
    r.col = j.value("col", 0);
    r.peak_radiance = j.value("peak_radiance", 0.0f);
    r.prominence = j.value("prominence", 0.0f);
    r.local_background = j.value("local_background", 0.0f);
    r.snr = j.value("snr", 0.0f);
    r.confidence = j.value("confidence", 0.0);
    r.flags = j.value("flags", std::vector<std::string>{});
    r.flag_details = j.value("flag_details", std::vector<std::string>{});
    if (j.contains("correlated_mmsi") && !j["correlated_mmsi"].is_null())
      r.correlated_mmsi = j["correlated_mmsi"].get<std::string>();
    if (j.contains("correlation_distance_m") && !j["correlation_distance_m"].is_null())
      r.correlation_distance_m = j["correlation_distance_m"].get<double>();
    r.crop_path = j.value("crop_path", std::string{});
    if (j.contains("acquired_at")) r.acquired_at_ms = parse_iso8601_ms(j["acquired_at"]);
    if (j.contains("timings_ms")) {
      const auto& t = j["timings_ms"];
      r.timings.stage1 = t.value("stage1", 0.0);
      r.timings.stage2 = t.value("stage2", 0.0);
      r.timings.stage3 = t.value("stage3", 0.0);
      r.timings.geofence = t.value("geofence", 0.0);
      r.timings.correlate = t.value("correlate", 0.0);
      r.timings.crop = t.value("crop", 0.0);
      r.timings.total = t.value("total", 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad detection record: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
  if (!config_.model_path.empty()) model_ = load_model(config_.model_path);
  if (!config_.infrastructure_path.empty())
    infrastructure_ = InfrastructureIndex::load_jsonl(config_.infrastructure_path);
  if (model_ && model_->input_size != config_.crop_size)
    throw ConfigError("crop_size " + std::to_string(config_.crop_size) +
                      " does not match model input_size " + std::to_string(model_->input_size));
}

FrameResult Pipeline::process_frame(const RasterFrame& frame,
                                    const std::vector<AisTrack>& ais) const {
  FrameResult result;
  result.frame_id = frame.frame_id;
  const auto t_start = std::chrono::steady_clock::now();

  // Stage 1: spike extraction.
  auto t0 = std::chrono::steady_clock::now();
  const std::vector<LightCandidate> candidates =
      detect_light_sources(frame, config_.stage1, config_.worker_count);
  result.timings.stage1 = ms_since(t0);

  // Stage 2: rule suppression (annotating partition).
  t0 = std::chrono::steady_clock::now();
  const Stage2Result stage2 = run_stage2(candidates, frame, config_.stage2);
  result.timings.stage2 = ms_since(t0);

  // Stage 3: classifier filter (pass-through when no model is configured).
  t0 = std::chrono::steady_clock::now();
  Stage3Result stage3;
  if (model_) {
    std::vector<LightCandidate> kept_cands;
    kept_cands.reserve(stage2.kept.size());
    for (const auto& fc : stage2.kept) kept_cands.push_back(fc.candidate);
    stage3 = filter_detections(kept_cands, frame, *model_, config_.confidence_threshold);
  } else {
    for (const auto& fc : stage2.kept) stage3.accepted.push_back({fc.candidate, 1.0});
  }
  result.timings.stage3 = ms_since(t0);

  // Geofence against fixed marine infrastructure.
  t0 = std::chrono::steady_clock::now();
  std::vector<GeoPoint> accepted_points;
  accepted_points.reserve(stage3.accepted.size());
  for (const auto& cc : stage3.accepted) accepted_points.push_back(cc.candidate.geo);
  const GeofenceResult fence = suppress_near_infrastructure(accepted_points, infrastructure_);
  result.timings.geofence = ms_since(t0);

  // Correlate survivors against the AIS snapshot at frame time.
  t0 = std::chrono::steady_clock::now();
  std::vector<DetectionPoint> detection_points;
  detection_points.reserve(fence.kept.size());
  // Candidate identity: position in stage-1 output order. Stable across
  // reruns of the same frame.
  const auto candidate_seq = [&](const LightCandidate& c) {
    for (size_t i = 0; i < candidates.size(); ++i)
      if (candidates[i].row == c.row && candidates[i].col == c.col) return static_cast<int>(i);
    return -1;
  };
  const auto make_id = [&](int n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), ":%05d", n);
    return frame.frame_id + buf;
  };
  for (size_t k = 0; k < fence.kept.size(); ++k) {
    const auto& cc = stage3.accepted[fence.kept[k]];
    detection_points.push_back(
        DetectionPoint{make_id(candidate_seq(cc.candidate)), cc.candidate.geo});
  }
  const CorrelationResult correlation =
      correlate(detection_points, ais, frame.acquired_at_ms, config_.gate);
  std::unordered_map<std::string, std::pair<std::string, double>> match_by_id;
  for (const auto& m : correlation.matches)
    match_by_id.emplace(m.detection_id, std::make_pair(m.vessel_id, m.distance_m));
  result.timings.correlate = ms_since(t0);

  // Assemble records: kept detections with crops, then audit records.
  t0 = std::chrono::steady_clock::now();
  std::string crops_dir;
  if (!config_.output_dir.empty()) {
    crops_dir = (fs::path(config_.output_dir) / "crops" / frame.frame_id).string();
    fs::create_directories(crops_dir);
  }

  const auto base_record = [&](const LightCandidate& c) {
    DetectionRecord r;
    r.detection_id = make_id(candidate_seq(c));
    r.frame_id = frame.frame_id;
    r.geo = c.geo;
    r.row = c.row;
    r.col = c.col;
    r.peak_radiance = c.peak_radiance;
    r.prominence = c.prominence;
    r.local_background = c.local_background;
    r.snr = c.snr;
    r.acquired_at_ms = frame.acquired_at_ms;
    return r;
  };

  for (size_t k = 0; k < fence.kept.size(); ++k) {
    const auto& cc = stage3.accepted[fence.kept[k]];
    DetectionRecord r = base_record(cc.candidate);
    r.status = "kept";
    r.confidence = cc.confidence;
    const auto it = match_by_id.find(r.detection_id);
    if (it != match_by_id.end()) {
      r.correlated_mmsi = it->second.first;
      r.correlation_distance_m = it->second.second;
    }
    if (!crops_dir.empty()) {
      const Crop crop = extract_crop(frame, cc.candidate.row, cc.candidate.col, config_.crop_size);
      std::string name = r.detection_id;
      for (auto& ch : name)
        if (ch == ':') ch = '_';
      r.crop_path = (fs::path(crops_dir) / name).string();
      write_crop(crop, cc.candidate.geo, r.detection_id, r.crop_path);
    }
    result.records.push_back(std::move(r));
    result.kept_count += 1;
  }
  result.timings.crop = ms_since(t0);

  for (const auto& [idx, entry] : fence.suppressed) {
    const auto& cc = stage3.accepted[idx];
    DetectionRecord r = base_record(cc.candidate);
    r.status = "geofenced";
    r.confidence = cc.confidence;
    r.flags.push_back(std::string("INFRASTRUCTURE:") + to_string(entry.kind));
    std::ostringstream detail;
    detail << "within " << entry.radius_m << " m of " << to_string(entry.kind) << " at ("
           << entry.geo.lat_deg << "," << entry.geo.lon_deg << ")";
    r.flag_details.push_back(detail.str());
    result.records.push_back(std::move(r));
    result.geofenced_count += 1;
  }
  for (const auto& cc : stage3.rejected) {
    DetectionRecord r = base_record(cc.candidate);
    r.status = "rejected";
    r.confidence = cc.confidence;
    result.records.push_back(std::move(r));
    result.rejected_count += 1;
  }
  for (const auto& fc : stage2.suppressed) {
    DetectionRecord r = base_record(fc.candidate);
    r.status = "suppressed";
    for (const auto& flag : fc.flags) {
      r.flags.emplace_back(to_string(flag.rule));
      r.flag_details.push_back(flag.detail);
    }
    result.records.push_back(std::move(r));
    result.suppressed_count += 1;
  }

  result.timings.total = ms_since(t_start);
  for (auto& r : result.records) r.timings = result.timings;
  return result;
}

}  // namespace nightwatch
