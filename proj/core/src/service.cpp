#include "nightwatch/service.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "nightwatch/errors.hpp"
#include "nightwatch/timeutil.hpp"

namespace nightwatch {

namespace fs = std::filesystem;

const char* to_string(FrameState state) {
  switch (state) {
    case FrameState::Queued: return "queued";
    case FrameState::Processing: return "processing";
    case FrameState::Done: return "done";
    case FrameState::Failed: return "failed";
  }
  return "?";
}

ServiceConfig ServiceConfig::from_json_text(const std::string& text, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("service config parse error: ") + e.what());
  }
  ServiceConfig cfg;
  try {
    if (j.contains("pipeline"))
      cfg.pipeline = PipelineConfig::from_json_text(j["pipeline"].dump(), base_dir);
    const auto resolve = [&](const std::string& p) -> std::string {
      if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
      return (fs::path(base_dir) / p).string();
    };
    cfg.data_dir = resolve(j.value("data_dir", std::string("nightwatch-data")));
    cfg.inbox_dir = resolve(j.value("inbox_dir", std::string{}));
    cfg.ais_path = resolve(j.value("ais_path", std::string{}));
    cfg.http_port = j.value("http_port", cfg.http_port);
    cfg.poll_interval_ms = j.value("poll_interval_ms", cfg.poll_interval_ms);
    cfg.queue_capacity = j.value("queue_capacity", cfg.queue_capacity);
    if (cfg.http_port < 0 || cfg.http_port > 65535) throw ConfigError("http_port out of range");
    if (cfg.poll_interval_ms < 10) throw ConfigError("poll_interval_ms must be >= 10");
    if (cfg.queue_capacity < 1) throw ConfigError("queue_capacity must be >= 1");
    if (!cfg.ais_path.empty() && !fs::exists(cfg.ais_path))
      throw ConfigError("ais_path does not exist: " + cfg.ais_path);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("service config field error: ") + e.what());
  }
  if (cfg.pipeline.output_dir.empty()) cfg.pipeline.output_dir = cfg.data_dir;
  return cfg;
}

ServiceConfig ServiceConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open service config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), fs::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------

struct VesselService::Impl {
  ServiceConfig config;
  Pipeline pipeline;
  httplib::Server server;

  std::thread http_thread;
  std::thread watcher_thread;
  std::vector<std::thread> workers;
  std::atomic<bool> running{false};

  mutable std::mutex mu;
  mutable std::condition_variable cv_work;     // workers only
  mutable std::condition_variable cv_watcher;  // poll-interval shutdown nudge
  mutable std::condition_variable cv_idle;
  std::map<std::string, FrameState> states;
  std::map<std::string, std::string> failure_reasons;
  std::deque<std::string> queue;
  int active_workers = 0;
  ServiceCounters counters;
  std::vector<DetectionRecord> kept_cache;  // for bbox/since queries

  std::mutex ais_mu;
  std::shared_ptr<const std::vector<AisTrack>> ais = std::make_shared<std::vector<AisTrack>>();
  fs::file_time_type ais_mtime{};

  std::mutex log_mu;

  explicit Impl(ServiceConfig cfg) : config(std::move(cfg)), pipeline(config.pipeline) {}

  fs::path spool_dir() const { return fs::path(config.data_dir) / "spool"; }
  fs::path frames_dir() const { return fs::path(config.data_dir) / "frames"; }
  fs::path marker_path(const std::string& id) const { return frames_dir() / (id + ".done"); }
  fs::path records_path(const std::string& id) const {
    return frames_dir() / (id + ".detections.jsonl");
  }

  std::shared_ptr<const std::vector<AisTrack>> ais_snapshot() {
    std::lock_guard lock(ais_mu);
    return ais;
  }

  void reload_ais_if_changed() {
    if (config.ais_path.empty()) return;
    std::error_code ec;
    const auto mtime = fs::last_write_time(config.ais_path, ec);
    if (ec) return;
    {
      std::lock_guard lock(ais_mu);
      if (mtime == ais_mtime) return;
    }
    try {
      auto tracks = std::make_shared<std::vector<AisTrack>>(
          build_tracks(load_ais_jsonl(config.ais_path)));
      std::lock_guard lock(ais_mu);
      ais = std::move(tracks);
      ais_mtime = mtime;
    } catch (const std::exception&) {
      // Keep serving the previous snapshot when a partially-written AIS file
      // shows up; the watcher retries on the next poll.
    }
  }

  // ---- admission ----

  enum class Admit { Accepted, Duplicate, QueueFull };

  Admit admit_spooled(const std::string& frame_id, bool recovered) {
    std::lock_guard lock(mu);
    if (states.count(frame_id)) return Admit::Duplicate;
    if (queue.size() >= static_cast<size_t>(config.queue_capacity)) return Admit::QueueFull;
    states[frame_id] = FrameState::Queued;
    queue.push_back(frame_id);
    counters.frames_received += 1;
    if (recovered) counters.frames_recovered += 1;
    cv_work.notify_one();
    return Admit::Accepted;
  }

  bool known(const std::string& frame_id) const {
    std::lock_guard lock(mu);
    return states.count(frame_id) > 0;
  }

  Admit admit_upload(const std::string& frame_id, const std::string& header_text,
                     const std::string& planes_bytes) {
    {
      std::lock_guard lock(mu);
      if (states.count(frame_id)) {
        counters.frames_deduplicated += 1;
        return Admit::Duplicate;
      }
      if (queue.size() >= static_cast<size_t>(config.queue_capacity)) return Admit::QueueFull;
    }
    const fs::path base = spool_dir() / frame_id;
    {
      std::ofstream planes(base.string() + ".planes", std::ios::binary | std::ios::trunc);
      planes.write(planes_bytes.data(), static_cast<std::streamsize>(planes_bytes.size()));
      if (!planes) throw Error("failed to spool planes for " + frame_id);
    }
    {
      std::ofstream hdr(base.string() + ".json", std::ios::trunc);
      hdr << header_text;
      if (!hdr) throw Error("failed to spool header for " + frame_id);
    }
    const Admit result = admit_spooled(frame_id, false);
    if (result == Admit::Duplicate) {
      std::lock_guard lock(mu);
      counters.frames_deduplicated += 1;
    }
    return result;
  }

  // ---- processing ----

  void persist_records(const std::string& frame_id, const FrameResult& result) {
    const fs::path tmp = records_path(frame_id).string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      for (const auto& r : result.records) out << r.to_jsonl() << "\n";
      if (!out) throw Error("failed writing records for " + frame_id);
    }
    fs::rename(tmp, records_path(frame_id));
    std::lock_guard lock(log_mu);
    std::ofstream log(fs::path(config.data_dir) / "detections.jsonl", std::ios::app);
    for (const auto& r : result.records) log << r.to_jsonl() << "\n";
  }

  void write_marker(const std::string& frame_id, const nlohmann::json& body) {
    const fs::path tmp = marker_path(frame_id).string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << body.dump(2) << "\n";
      if (!out) throw Error("failed writing marker for " + frame_id);
    }
    fs::rename(tmp, marker_path(frame_id));  // completion becomes visible atomically
  }

  void process_one(const std::string& frame_id) {
    bool stale = false;
    try {
      const RasterFrame frame = load_frame((spool_dir() / frame_id).string());
      stale = now_ms() - frame.acquired_at_ms > config.pipeline.max_frame_age_ms;
      const auto snapshot = ais_snapshot();
      const FrameResult result = pipeline.process_frame(frame, *snapshot);
      persist_records(frame_id, result);

      nlohmann::json marker{
          {"frame_id", frame_id},
          {"status", "done"},
          {"stale", stale},
          {"kept", result.kept_count},
          {"suppressed", result.suppressed_count},
          {"rejected", result.rejected_count},
          {"geofenced", result.geofenced_count},
          {"completed_at", format_iso8601_ms(now_ms())},
          {"timings_ms",
           {{"stage1", result.timings.stage1},
            {"stage2", result.timings.stage2},
            {"stage3", result.timings.stage3},
            {"geofence", result.timings.geofence},
            {"correlate", result.timings.correlate},
            {"crop", result.timings.crop},
            {"total", result.timings.total}}},
      };
      write_marker(frame_id, marker);

      std::lock_guard lock(mu);
      states[frame_id] = FrameState::Done;
      counters.frames_processed += 1;
      if (stale) counters.frames_stale += 1;
      counters.detections_kept += static_cast<uint64_t>(result.kept_count);
      counters.candidates_suppressed += static_cast<uint64_t>(result.suppressed_count);
      counters.candidates_rejected += static_cast<uint64_t>(result.rejected_count);
      counters.candidates_geofenced += static_cast<uint64_t>(result.geofenced_count);
      counters.stage1_ms += result.timings.stage1;
      counters.stage2_ms += result.timings.stage2;
      counters.stage3_ms += result.timings.stage3;
      counters.geofence_ms += result.timings.geofence;
      counters.correlate_ms += result.timings.correlate;
      counters.crop_ms += result.timings.crop;
      counters.total_ms += result.timings.total;
      for (const auto& r : result.records)
        if (r.kept()) kept_cache.push_back(r);
    } catch (const std::exception& e) {
      // Structured failure: a marker so the frame is never retried blind,
      // plus the reason for the API.
      try {
        write_marker(frame_id, nlohmann::json{{"frame_id", frame_id},
                                              {"status", "failed"},
                                              {"error", e.what()},
                                              {"completed_at", format_iso8601_ms(now_ms())}});
      } catch (const std::exception&) {
      }
      std::lock_guard lock(mu);
      states[frame_id] = FrameState::Failed;
      failure_reasons[frame_id] = e.what();
      counters.frames_failed += 1;
    }
  }

  void worker_loop() {
    while (true) {
      std::string frame_id;
      {
        std::unique_lock lock(mu);
        cv_work.wait(lock, [&] { return !running.load() || !queue.empty(); });
        if (!running.load() && queue.empty()) return;
        frame_id = queue.front();
        queue.pop_front();
        states[frame_id] = FrameState::Processing;
        active_workers += 1;
      }
      process_one(frame_id);
      {
        std::lock_guard lock(mu);
        active_workers -= 1;
      }
      cv_idle.notify_all();
    }
  }

  // ---- inbox watcher ----

  void scan_inbox() {
    if (config.inbox_dir.empty()) return;
    std::error_code ec;
    fs::directory_iterator it(config.inbox_dir, ec);
    if (ec) return;
    for (const auto& entry : it) {
      if (!entry.is_regular_file()) continue;
      const fs::path header = entry.path();
      if (header.extension() != ".json") continue;
      fs::path planes = header;
      planes.replace_extension(".planes");
      if (!fs::exists(planes)) continue;  // writers create .planes first

      std::string frame_id;
      try {
        std::ifstream in(header);
        nlohmann::json j;
        in >> j;
        frame_id = j.at("frame_id").get<std::string>();
      } catch (const std::exception&) {
        continue;  // not yet fully written, retry next poll
      }
      if (known(frame_id)) {
        std::error_code rmec;
        fs::remove(header, rmec);
        fs::remove(planes, rmec);
        std::lock_guard lock(mu);
        counters.frames_deduplicated += 1;
        continue;
      }
      const fs::path dst = spool_dir() / frame_id;
      std::error_code mvec;
      fs::rename(planes, dst.string() + ".planes", mvec);
      if (mvec) {
        fs::copy_file(planes, dst.string() + ".planes", fs::copy_options::overwrite_existing, mvec);
        fs::remove(planes, mvec);
      }
      fs::rename(header, dst.string() + ".json", mvec);
      if (mvec) {
        fs::copy_file(header, dst.string() + ".json", fs::copy_options::overwrite_existing, mvec);
        fs::remove(header, mvec);
      }
      admit_spooled(frame_id, false);
    }
  }

  void watcher_loop() {
    while (running.load()) {
      scan_inbox();
      reload_ais_if_changed();
      std::unique_lock lock(mu);
      cv_watcher.wait_for(lock, std::chrono::milliseconds(config.poll_interval_ms),
                          [&] { return !running.load(); });
    }
  }

  // ---- recovery ----

  void recover() {
    fs::create_directories(spool_dir());
    fs::create_directories(frames_dir());
    if (!config.inbox_dir.empty()) fs::create_directories(config.inbox_dir);

    for (const auto& entry : fs::directory_iterator(frames_dir())) {
      const fs::path p = entry.path();
      if (p.extension() != ".done") continue;
      const std::string frame_id = p.stem().string();
      FrameState state = FrameState::Done;
      std::string reason;
      try {
        std::ifstream in(p);
        nlohmann::json j;
        in >> j;
        if (j.value("status", std::string("done")) == "failed") {
          state = FrameState::Failed;
          reason = j.value("error", std::string{});
        }
      } catch (const std::exception&) {
      }
      std::lock_guard lock(mu);
      states[frame_id] = state;
      if (!reason.empty()) failure_reasons[frame_id] = reason;
    }

    // Rebuild the query cache from completed frames.
    for (const auto& [frame_id, state] : frame_states_copy()) {
      if (state != FrameState::Done) continue;
      std::ifstream in(records_path(frame_id));
      if (!in) continue;
      std::string line;
      std::vector<DetectionRecord> kept;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const DetectionRecord r = DetectionRecord::from_jsonl(line);
        if (r.kept()) kept.push_back(r);
      }
      std::lock_guard lock(mu);
      kept_cache.insert(kept_cache.end(), kept.begin(), kept.end());
    }

    // Spooled frames without a completion marker were interrupted mid-flight:
    // those and only those are reprocessed.
    std::vector<std::string> pending;
    for (const auto& entry : fs::directory_iterator(spool_dir())) {
      const fs::path p = entry.path();
      if (p.extension() != ".json") continue;
      const std::string frame_id = p.stem().string();
      if (!known(frame_id)) pending.push_back(frame_id);
    }
    std::sort(pending.begin(), pending.end());
    for (const auto& frame_id : pending) admit_spooled(frame_id, true);
  }

  std::map<std::string, FrameState> frame_states_copy() const {
    std::lock_guard lock(mu);
    return states;
  }

  // ---- HTTP ----

  void setup_routes() {
    server.set_payload_max_length(1ull << 30);

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok\n", "text/plain");
    });

    server.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
      const ServiceCounters c = counters_copy();
      size_t depth;
      {
        std::lock_guard lock(mu);
        depth = queue.size();
      }
      std::ostringstream out;
      out << "nightwatch_frames_received " << c.frames_received << "\n"
          << "nightwatch_frames_processed " << c.frames_processed << "\n"
          << "nightwatch_frames_failed " << c.frames_failed << "\n"
          << "nightwatch_frames_deduplicated " << c.frames_deduplicated << "\n"
          << "nightwatch_frames_recovered " << c.frames_recovered << "\n"
          << "nightwatch_frames_stale " << c.frames_stale << "\n"
          << "nightwatch_detections_kept " << c.detections_kept << "\n"
          << "nightwatch_candidates_suppressed " << c.candidates_suppressed << "\n"
          << "nightwatch_candidates_rejected " << c.candidates_rejected << "\n"
          << "nightwatch_candidates_geofenced " << c.candidates_geofenced << "\n"
          << "nightwatch_queue_depth " << depth << "\n"
          << "nightwatch_stage1_ms_total " << c.stage1_ms << "\n"
          << "nightwatch_stage2_ms_total " << c.stage2_ms << "\n"
          << "nightwatch_stage3_ms_total " << c.stage3_ms << "\n"
          << "nightwatch_geofence_ms_total " << c.geofence_ms << "\n"
          << "nightwatch_correlate_ms_total " << c.correlate_ms << "\n"
          << "nightwatch_crop_ms_total " << c.crop_ms << "\n"
          << "nightwatch_frame_ms_total " << c.total_ms << "\n";
      res.set_content(out.str(), "text/plain");
    });

    server.Post("/v1/frames", [this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_file("header") || !req.has_file("planes")) {
        res.status = 400;
        res.set_content(R"({"error":"multipart fields 'header' and 'planes' required"})",
                        "application/json");
        return;
      }
      const auto& header = req.get_file_value("header");
      const auto& planes = req.get_file_value("planes");
      std::string frame_id;
      try {
        const auto j = nlohmann::json::parse(header.content);
        frame_id = j.at("frame_id").get<std::string>();
        if (frame_id.empty() || frame_id.find('/') != std::string::npos ||
            frame_id.find("..") != std::string::npos)
          throw FormatError("invalid frame_id");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        return;
      }
      try {
        switch (admit_upload(frame_id, header.content, planes.content)) {
          case Admit::Accepted:
            res.status = 202;
            res.set_content(nlohmann::json{{"frame_id", frame_id}, {"status", "queued"}}.dump(),
                            "application/json");
            break;
          case Admit::Duplicate: {
            FrameState state;
            {
              std::lock_guard lock(mu);
              state = states.at(frame_id);
            }
            res.status = 200;
            res.set_content(nlohmann::json{{"frame_id", frame_id},
                                           {"status", "duplicate"},
                                           {"state", to_string(state)}}
                                .dump(),
                            "application/json");
            break;
          }
          case Admit::QueueFull:
            res.status = 503;
            res.set_content(R"({"error":"work queue full"})", "application/json");
            break;
        }
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });

    server.Get("/v1/detections", [this](const httplib::Request& req, httplib::Response& res) {
      if (req.has_param("frame_id")) {
        const std::string frame_id = req.get_param_value("frame_id");
        FrameState state;
        {
          std::lock_guard lock(mu);
          const auto it = states.find(frame_id);
          if (it == states.end()) {
            res.status = 404;
            res.set_content(R"({"error":"unknown frame_id"})", "application/json");
            return;
          }
          state = it->second;
        }
        nlohmann::json body{{"frame_id", frame_id}};
        if (state == FrameState::Done) {
          body["status"] = "done";
          auto detections = nlohmann::json::array();
          std::ifstream in(records_path(frame_id));
          std::string line;
          while (std::getline(in, line))
            if (!line.empty()) detections.push_back(nlohmann::json::parse(line));
          body["detections"] = detections;
        } else if (state == FrameState::Failed) {
          body["status"] = "failed";
          std::lock_guard lock(mu);
          const auto it = failure_reasons.find(frame_id);
          if (it != failure_reasons.end()) body["error"] = it->second;
        } else {
          body["status"] = "processing";
        }
        res.set_content(body.dump(), "application/json");
        return;
      }

      // bbox=minLon,minLat,maxLon,maxLat with optional since=iso8601
      double min_lon = -180.0, min_lat = -90.0, max_lon = 180.0, max_lat = 90.0;
      if (req.has_param("bbox")) {
        const std::string bbox = req.get_param_value("bbox");
        if (std::sscanf(bbox.c_str(), "%lf,%lf,%lf,%lf", &min_lon, &min_lat, &max_lon, &max_lat) !=
            4) {
          res.status = 400;
          res.set_content(R"({"error":"bbox must be minLon,minLat,maxLon,maxLat"})",
                          "application/json");
          return;
        }
      }
      int64_t since_ms = INT64_MIN;
      if (req.has_param("since")) {
        try {
          since_ms = parse_iso8601_ms(req.get_param_value("since"));
        } catch (const std::exception& e) {
          res.status = 400;
          res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
          return;
        }
      }
      auto detections = nlohmann::json::array();
      {
        std::lock_guard lock(mu);
        for (const auto& r : kept_cache) {
          if (r.acquired_at_ms < since_ms) continue;
          if (r.geo.lat_deg < min_lat || r.geo.lat_deg > max_lat) continue;
          if (r.geo.lon_deg < min_lon || r.geo.lon_deg > max_lon) continue;
          detections.push_back(nlohmann::json::parse(r.to_jsonl()));
        }
      }
      res.set_content(nlohmann::json{{"detections", detections}}.dump(), "application/json");
    });
  }

  ServiceCounters counters_copy() const {
    std::lock_guard lock(mu);
    return counters;
  }
};

VesselService::VesselService(ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

VesselService::~VesselService() {
  if (impl_ && impl_->running.load()) stop();
}

void VesselService::start() {
  impl_->running.store(true);
  impl_->recover();
  if (!impl_->config.ais_path.empty()) impl_->reload_ais_if_changed();
  impl_->setup_routes();

  if (impl_->config.http_port == 0) {
    bound_port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (bound_port_ <= 0) throw Error("failed to bind HTTP socket");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", impl_->config.http_port))
      throw Error("failed to bind HTTP port " + std::to_string(impl_->config.http_port));
    bound_port_ = impl_->config.http_port;
  }
  impl_->http_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();

  const int worker_count = std::max(1, impl_->config.pipeline.worker_count);
  for (int i = 0; i < worker_count; ++i)
    impl_->workers.emplace_back([this] { impl_->worker_loop(); });
  impl_->watcher_thread = std::thread([this] { impl_->watcher_loop(); });
}

void VesselService::stop() {
  impl_->running.store(false);
  impl_->server.stop();
  impl_->cv_work.notify_all();
  impl_->cv_watcher.notify_all();
  if (impl_->http_thread.joinable()) impl_->http_thread.join();
  if (impl_->watcher_thread.joinable()) impl_->watcher_thread.join();
  for (auto& w : impl_->workers)
    if (w.joinable()) w.join();
  impl_->workers.clear();
}

ServiceCounters VesselService::counters() const { return impl_->counters_copy(); }

bool VesselService::wait_idle(int timeout_ms) const {
  std::unique_lock lock(impl_->mu);
  return impl_->cv_idle.wait_for(lock, std::chrono::milliseconds(timeout_ms), [&] {
    return impl_->queue.empty() && impl_->active_workers == 0;
  });
}

std::map<std::string, FrameState> VesselService::frame_states() const {
  return impl_->frame_states_copy();
}

}  // namespace nightwatch
