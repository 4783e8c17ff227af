// nightwatch CLI: operator entry points over the detection library.
//
//   synth     generate a synthetic frame (+ truth, AIS, gazetteer, demo model)
//   detect    run the detection pipeline over one frame container
//   correlate annotate detection records with AIS matches
//   eval      precision/recall/F1 of predictions against ground truth
//   serve     streaming service (inbox watcher + HTTP API)
//   inspect   print the audit trail for one detection id

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "nightwatch/ais.hpp"
#include "nightwatch/classifier.hpp"
#include "nightwatch/errors.hpp"
#include "nightwatch/eval.hpp"
#include "nightwatch/pipeline.hpp"
#include "nightwatch/raster.hpp"
#include "nightwatch/service.hpp"
#include "nightwatch/stage2.hpp"
#include "nightwatch/synth.hpp"
#include "nightwatch/timeutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_shutdown{false};

void handle_signal(int) { g_shutdown.store(true); }

int cmd_synth(const std::string& spec_path, const std::string& preset, uint64_t seed,
              const std::string& out_dir, bool emit_ais, double jitter_m, double dark_fraction,
              uint64_t ais_seed, bool emit_model, bool emit_gazetteer) {
  nightwatch::SceneSpec spec;
  if (!spec_path.empty()) {
    spec = nightwatch::SceneSpec::from_json_file(spec_path);
  } else if (preset == "low-lat") {
    spec = nightwatch::default_low_lat_scene(seed);
  } else if (preset == "high-lat") {
    spec = nightwatch::default_high_lat_scene(seed);
  } else {
    std::cerr << "synth: need --spec FILE or --preset low-lat|high-lat\n";
    return 2;
  }

  fs::create_directories(out_dir);
  auto [frame, truth] = nightwatch::generate_frame(spec);
  const std::string base = (fs::path(out_dir) / frame.frame_id).string();
  nightwatch::write_frame(frame, base);
  truth.save_jsonl(base + ".truth.jsonl");

  json summary{{"frame_id", frame.frame_id},
               {"frame", base + ".json"},
               {"truth", base + ".truth.jsonl"},
               {"vessels", truth.of_kind(nightwatch::TruthKind::Vessel).size()},
               {"records", truth.records.size()}};

  if (emit_ais) {
    const auto reports = nightwatch::generate_ais(truth, jitter_m, dark_fraction, ais_seed);
    nightwatch::save_ais_jsonl(reports, base + ".ais.jsonl");
    summary["ais"] = base + ".ais.jsonl";
    summary["ais_reports"] = reports.size();
  }
  if (emit_gazetteer) {
    nightwatch::FlareGazetteer gaz;
    for (const auto& site : spec.flare_sites)
      gaz.sites.push_back({nightwatch::make_geo_point(site.lat, site.lon), site.radius_m});
    gaz.save_jsonl((fs::path(out_dir) / "gazetteer.jsonl").string());
    summary["gazetteer"] = (fs::path(out_dir) / "gazetteer.jsonl").string();
  }
  if (emit_model) {
    const auto model = nightwatch::make_demo_model(spec.background_mean_nw,
                                                   spec.vessel_intensity_lo_nw);
    nightwatch::save_model(model, (fs::path(out_dir) / "model").string());
    summary["model"] = (fs::path(out_dir) / "model.json").string();
  }

  // A ready-to-run pipeline config wired to the emitted scene assets.
  json config{{"stage1",
               {{"prominence_threshold", 6.0 * spec.background_noise_sigma_nw},
                {"sigma_estimator", "mad"}}},
              {"stage2", json::object()},
              {"stage3", {{"confidence_threshold", 0.95}}},
              {"crop_size", 9}};
  config["stage2"]["saa_polygon_path"] = "default";
  if (emit_gazetteer) config["stage2"]["gazetteer_path"] = "gazetteer.jsonl";
  if (emit_model) config["stage3"]["model_path"] = "model";
  {
    std::ofstream out(fs::path(out_dir) / "pipeline-config.json");
    out << config.dump(2) << "\n";
  }
  summary["pipeline_config"] = (fs::path(out_dir) / "pipeline-config.json").string();
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_detect(const std::string& frame_path, const std::string& config_path,
               const std::string& out_dir, const std::string& model_path, double threshold,
               const std::string& ais_path, int workers) {
  nightwatch::PipelineConfig config;
  if (!config_path.empty()) config = nightwatch::PipelineConfig::from_json_file(config_path);
  if (!model_path.empty()) config.model_path = model_path;
  if (threshold >= 0.0) config.confidence_threshold = threshold;
  if (workers > 0) config.worker_count = workers;
  config.output_dir = out_dir;
  fs::create_directories(out_dir);

  const nightwatch::RasterFrame frame = nightwatch::load_frame(frame_path);
  std::vector<nightwatch::AisTrack> tracks;
  if (!ais_path.empty())
    tracks = nightwatch::build_tracks(nightwatch::load_ais_jsonl(ais_path));

  const nightwatch::Pipeline pipeline(config);
  const nightwatch::FrameResult result = pipeline.process_frame(frame, tracks);

  const std::string records_path =
      (fs::path(out_dir) / (frame.frame_id + ".detections.jsonl")).string();
  std::ofstream out(records_path, std::ios::trunc);
  for (const auto& r : result.records) out << r.to_jsonl() << "\n";
  if (!out) throw nightwatch::Error("failed writing " + records_path);

  json summary{{"frame_id", result.frame_id},
               {"records", records_path},
               {"kept", result.kept_count},
               {"suppressed", result.suppressed_count},
               {"rejected", result.rejected_count},
               {"geofenced", result.geofenced_count},
               {"timings_ms",
                {{"stage1", result.timings.stage1},
                 {"stage2", result.timings.stage2},
                 {"stage3", result.timings.stage3},
                 {"geofence", result.timings.geofence},
                 {"correlate", result.timings.correlate},
                 {"crop", result.timings.crop},
                 {"total", result.timings.total}}}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_correlate(const std::string& detections_path, const std::string& ais_path,
                  const std::string& out_path, double base_m, double max_speed,
                  double max_extrapolation_s) {
  std::ifstream in(detections_path);
  if (!in) throw nightwatch::FormatError("cannot open detections: " + detections_path);
  std::vector<nightwatch::DetectionRecord> records;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) records.push_back(nightwatch::DetectionRecord::from_jsonl(line));

  const auto tracks = nightwatch::build_tracks(nightwatch::load_ais_jsonl(ais_path));

  nightwatch::GateParams gate;
  gate.base_uncertainty_m = base_m;
  gate.max_speed_mps = max_speed;
  gate.max_extrapolation_ms = static_cast<int64_t>(max_extrapolation_s * 1000.0);

  // Correlate per frame at each frame's acquisition time; only kept records
  // enter the matching.
  std::map<std::string, std::vector<size_t>> by_frame;
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].kept()) by_frame[records[i].frame_id].push_back(i);

  size_t matched = 0, dark = 0;
  for (const auto& [frame_id, idxs] : by_frame) {
    std::vector<nightwatch::DetectionPoint> points;
    points.reserve(idxs.size());
    for (size_t i : idxs)
      points.push_back({records[i].detection_id, records[i].geo});
    const auto result =
        nightwatch::correlate(points, tracks, records[idxs.front()].acquired_at_ms, gate);
    std::map<std::string, std::pair<std::string, double>> match;
    for (const auto& m : result.matches) match[m.detection_id] = {m.vessel_id, m.distance_m};
    for (size_t i : idxs) {
      const auto it = match.find(records[i].detection_id);
      if (it != match.end()) {
        records[i].correlated_mmsi = it->second.first;
        records[i].correlation_distance_m = it->second.second;
        ++matched;
      } else {
        records[i].correlated_mmsi.reset();
        records[i].correlation_distance_m.reset();
        ++dark;
      }
    }
  }

  std::ofstream out(out_path, std::ios::trunc);
  for (const auto& r : records) out << r.to_jsonl() << "\n";
  if (!out) throw nightwatch::Error("failed writing " + out_path);

  std::cout << json{{"records", records.size()}, {"matched", matched}, {"dark", dark},
                    {"out", out_path}}
                   .dump(2)
            << "\n";
  return 0;
}

std::vector<nightwatch::GeoPoint> load_points(const std::string& path, bool truth_file) {
  std::ifstream in(path);
  if (!in) throw nightwatch::FormatError("cannot open " + path);
  std::vector<nightwatch::GeoPoint> points;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      if (truth_file && j.contains("kind") && j["kind"].get<std::string>() != "vessel")
        continue;  // synth truth carries artifact records too
      if (!truth_file && j.contains("status") && j["status"].get<std::string>() != "kept")
        continue;  // audit records are not predictions
      points.push_back(
          nightwatch::make_geo_point(j.at("lat").get<double>(), j.at("lon").get<double>()));
    } catch (const std::exception& e) {
      throw nightwatch::FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return points;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path, double radius_m) {
  const auto predictions = load_points(pred_path, false);
  const auto truth = load_points(truth_path, true);
  const auto report = nightwatch::score(predictions, truth, radius_m);
  std::cout << json{{"true_positives", report.true_positives},
                    {"false_positives", report.false_positives},
                    {"false_negatives", report.false_negatives},
                    {"precision", report.precision},
                    {"recall", report.recall},
                    {"f1", report.f1},
                    {"match_radius_m", radius_m},
                    {"predictions", predictions.size()},
                    {"truth", truth.size()}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_serve(const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    const char* env = std::getenv("NIGHTWATCH_CONFIG");
    if (env) path = env;
  }
  if (path.empty()) {
    std::cerr << "serve: need --config FILE or NIGHTWATCH_CONFIG\n";
    return 2;
  }
  nightwatch::ServiceConfig config = nightwatch::ServiceConfig::from_json_file(path);
  nightwatch::VesselService service(std::move(config));

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  service.start();
  std::cerr << "nightwatch service listening on 127.0.0.1:" << service.http_port() << "\n";
  while (!g_shutdown.load())
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  return 0;
}

int cmd_inspect(const std::string& detection_id, const std::string& data_dir) {
  // Search the service's global log plus any per-frame record files, so both
  // `serve` data dirs and `detect` output dirs are inspectable.
  std::vector<fs::path> logs;
  if (fs::exists(fs::path(data_dir) / "detections.jsonl"))
    logs.push_back(fs::path(data_dir) / "detections.jsonl");
  for (const auto& sub : {fs::path(data_dir), fs::path(data_dir) / "frames"}) {
    if (!fs::is_directory(sub)) continue;
    for (const auto& entry : fs::directory_iterator(sub)) {
      if (entry.path().string().ends_with(".detections.jsonl")) logs.push_back(entry.path());
    }
  }
  if (logs.empty())
    throw nightwatch::FormatError("no detection logs under " + data_dir);
  for (const auto& log : logs) {
    std::ifstream in(log);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      if (j.value("detection_id", std::string{}) == detection_id) {
        std::cout << j.dump(2) << "\n";
        return 0;
      }
    }
  }
  std::cerr << "inspect: detection '" << detection_id << "' not found under " << data_dir << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nightwatch: nighttime-lights vessel detection pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic frame with ground truth");
  std::string synth_spec, synth_preset = "low-lat", synth_out = ".";
  uint64_t synth_seed = 1, ais_seed = 99;
  bool emit_ais = false, emit_model = true, emit_gazetteer = true;
  double jitter_m = 200.0, dark_fraction = 0.3;
  synth->add_option("--spec", synth_spec, "scene spec JSON file");
  synth->add_option("--preset", synth_preset, "low-lat | high-lat (ignored with --spec)");
  synth->add_option("--seed", synth_seed, "scene seed");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_flag("--emit-ais", emit_ais, "also write jittered AIS reports");
  synth->add_option("--jitter-m", jitter_m, "AIS jitter radius (m)");
  synth->add_option("--dark-fraction", dark_fraction, "fraction of vessels with no AIS");
  synth->add_option("--ais-seed", ais_seed, "AIS jitter seed");
  synth->add_flag("--emit-model,!--no-emit-model", emit_model,
                  "write the scene-calibrated demo model (default on)");
  synth->add_flag("--emit-gazetteer,!--no-emit-gazetteer", emit_gazetteer,
                  "write the flare gazetteer (default on)");

  // detect
  auto* detect = app.add_subcommand("detect", "run the detection pipeline on a frame");
  std::string det_frame, det_config, det_out = "nightwatch-out", det_model, det_ais;
  double det_threshold = -1.0;
  int det_workers = 0;
  detect->add_option("--frame", det_frame, "frame container (.json or base path)")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_option("--config", det_config, "pipeline config JSON")->check(CLI::ExistingFile);
  detect->add_option("--out", det_out, "output directory")->required();
  detect->add_option("--model", det_model, "classifier model (overrides config)");
  detect->add_option("--threshold", det_threshold, "stage-3 confidence threshold");
  detect->add_option("--ais", det_ais, "AIS JSONL to correlate against")->check(CLI::ExistingFile);
  detect->add_option("--workers", det_workers, "stage-1 worker threads");

  // correlate
  auto* correlate = app.add_subcommand("correlate", "annotate detections with AIS matches");
  std::string cor_detections, cor_ais, cor_out;
  double cor_base = 1500.0, cor_speed = 12.86, cor_extrap = 1800.0;
  correlate->add_option("--detections", cor_detections, "detection records JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  correlate->add_option("--ais", cor_ais, "AIS JSONL")->required()->check(CLI::ExistingFile);
  correlate->add_option("--out", cor_out, "annotated output JSONL")->required();
  correlate->add_option("--gate-base-m", cor_base, "base gate radius (m)");
  correlate->add_option("--max-speed-mps", cor_speed, "gate growth per second of AIS staleness");
  correlate->add_option("--max-extrapolation-s", cor_extrap, "AIS usability window (s)");

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  std::string eval_pred, eval_truth;
  double eval_radius = 1500.0;
  eval->add_option("--pred", eval_pred, "prediction records JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--truth", eval_truth, "ground-truth JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--radius-m", eval_radius, "match radius (m)");

  // serve
  auto* serve = app.add_subcommand("serve", "run the streaming service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "service config JSON (or NIGHTWATCH_CONFIG)");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "print the audit trail for a detection");
  std::string ins_id, ins_data = "nightwatch-data";
  inspect->add_option("--detection", ins_id, "detection id")->required();
  inspect->add_option("--data", ins_data, "service data directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_spec, synth_preset, synth_seed, synth_out, emit_ais, jitter_m,
                       dark_fraction, ais_seed, emit_model, emit_gazetteer);
    if (detect->parsed())
      return cmd_detect(det_frame, det_config, det_out, det_model, det_threshold, det_ais,
                        det_workers);
    if (correlate->parsed())
      return cmd_correlate(cor_detections, cor_ais, cor_out, cor_base, cor_speed, cor_extrap);
    if (eval->parsed()) return cmd_eval(eval_pred, eval_truth, eval_radius);
    if (serve->parsed()) return cmd_serve(serve_config);
    if (inspect->parsed()) return cmd_inspect(ins_id, ins_data);
  } catch (const nightwatch::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nightwatch::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
