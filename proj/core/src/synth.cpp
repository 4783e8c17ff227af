#include "nightwatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nightwatch/errors.hpp"
#include "nightwatch/rng.hpp"
#include "nightwatch/timeutil.hpp"

namespace nightwatch {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMetersPerDegLat = 111194.92664455873;
constexpr int kArtifactClearancePx = 4;
constexpr int kMaxPlacementAttempts = 1000;

struct PlacedPoint {
  int row, col;
  int clearance;
};

bool clear_of(const std::vector<PlacedPoint>& placed, int row, int col, int clearance) {
  for (const auto& p : placed) {
    const int need = std::max(clearance, p.clearance);
    if (std::abs(row - p.row) < need && std::abs(col - p.col) < need) return false;
  }
  return true;
}

std::string padded_id(char prefix, size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%03zu", prefix, n);
  return buf;
}

}  // namespace

const char* to_string(TruthKind kind) {
  switch (kind) {
    case TruthKind::Vessel: return "vessel";
    case TruthKind::Flare: return "flare";
    case TruthKind::Aurora: return "aurora";
    case TruthKind::Streak: return "streak";
    case TruthKind::Smile: return "smile";
    case TruthKind::Cloud: return "cloud";
  }
  return "?";
}

TruthKind truth_kind_from_string(const std::string& name) {
  if (name == "vessel") return TruthKind::Vessel;
  if (name == "flare") return TruthKind::Flare;
  if (name == "aurora") return TruthKind::Aurora;
  if (name == "streak") return TruthKind::Streak;
  if (name == "smile") return TruthKind::Smile;
  if (name == "cloud") return TruthKind::Cloud;
  throw FormatError("unknown truth kind '" + name + "'");
}

std::vector<TruthRecord> GroundTruth::of_kind(TruthKind kind) const {
  std::vector<TruthRecord> out;
  for (const auto& r : records)
    if (r.kind == kind) out.push_back(r);
  return out;
}

void GroundTruth::save_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write ground truth: " + path);
  for (const auto& r : records) {
    nlohmann::json j{
        {"id", r.id},
        {"kind", to_string(r.kind)},
        {"lat", r.geo.lat_deg},
        {"lon", r.geo.lon_deg},
        {"row", r.row},
        {"col", r.col},
        {"intensity_nw", r.intensity_nw},
        {"frame_id", frame_id},
        {"ts", format_iso8601_ms(acquired_at_ms)},
    };
    out << j.dump() << "\n";
  }
}

GroundTruth GroundTruth::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open ground truth: " + path);
  GroundTruth truth;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TruthRecord r;
      r.id = j.at("id").get<std::string>();
      r.kind = truth_kind_from_string(j.at("kind").get<std::string>());
      r.geo = make_geo_point(j.at("lat").get<double>(), j.at("lon").get<double>());
      r.row = j.value("row", 0);
      r.col = j.value("col", 0);
      r.intensity_nw = j.value("intensity_nw", 0.0);
      if (truth.frame_id.empty() && j.contains("frame_id"))
        truth.frame_id = j["frame_id"].get<std::string>();
      if (truth.acquired_at_ms == 0 && j.contains("ts"))
        truth.acquired_at_ms = parse_iso8601_ms(j["ts"].get<std::string>());
      truth.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": bad truth record: " + e.what());
    }
  }
  return truth;
}

// ---------------------------------------------------------------------------
// SceneSpec JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::json range_json(double lo, double hi) { return nlohmann::json::array({lo, hi}); }

void read_range(const nlohmann::json& j, double& lo, double& hi) {
  if (!j.is_array() || j.size() != 2) throw FormatError("intensity range must be [lo, hi]");
  lo = j[0].get<double>();
  hi = j[1].get<double>();
}

}  // namespace

std::string SceneSpec::to_json_text() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["width"] = width;
  j["height"] = height;
  j["background_mean_nw"] = background_mean_nw;
  j["background_noise_sigma_nw"] = background_noise_sigma_nw;
  j["vessel_count"] = vessel_count;
  j["vessel_intensity_nw"] = range_json(vessel_intensity_lo_nw, vessel_intensity_hi_nw);
  j["min_separation_px"] = min_separation_px;
  j["placement_margin_px"] = placement_margin_px;
  auto flares = nlohmann::json::array();
  for (const auto& f : flare_sites)
    flares.push_back({{"lat", f.lat},
                      {"lon", f.lon},
                      {"intensity_nw", f.intensity_nw},
                      {"radius_m", f.radius_m}});
  j["flare_sites"] = flares;
  if (aurora) {
    j["aurora"] = {{"band_lat", range_json(aurora->band_lat_lo, aurora->band_lat_hi)},
                   {"glow_nw", range_json(aurora->glow_lo_nw, aurora->glow_hi_nw)},
                   {"bump_count", aurora->bump_count},
                   {"bump_nw", range_json(aurora->bump_lo_nw, aurora->bump_hi_nw)}};
  }
  auto streaks_j = nlohmann::json::array();
  for (const auto& s : streaks)
    streaks_j.push_back(
        {{"row", s.row}, {"count", s.count}, {"intensity_nw", range_json(s.lo_nw, s.hi_nw)}});
  j["streaks"] = streaks_j;
  if (smile) {
    j["smile"] = {{"margin_px", smile->margin_px},
                  {"noise_multiplier", smile->noise_multiplier},
                  {"per_edge_count", smile->per_edge_count},
                  {"intensity_nw", range_json(smile->lo_nw, smile->hi_nw)}};
  }
  if (clouds) {
    j["clouds"] = {{"patch_count", clouds->patch_count},
                   {"patch_radius_px", clouds->patch_radius_px},
                   {"glow_nw", range_json(clouds->glow_lo_nw, clouds->glow_hi_nw)},
                   {"moonlight_level", clouds->moonlight_level},
                   {"bump_count", clouds->bump_count},
                   {"bump_nw", range_json(clouds->bump_lo_nw, clouds->bump_hi_nw)}};
  }
  auto land = nlohmann::json::array();
  for (const auto& poly : land_polygons) {
    auto ring = nlohmann::json::array();
    for (const auto& v : poly.vertices()) ring.push_back({v.lat_deg, v.lon_deg});
    land.push_back(ring);
  }
  j["land_polygons"] = land;
  j["geo"] = {{"origin_lat", origin_lat}, {"origin_lon", origin_lon}, {"deg_per_px", deg_per_px}};
  j["moonlight_base"] = moonlight_base;
  j["frame_id"] = frame_id;
  j["satellite_id"] = satellite_id;
  j["acquired_at"] = format_iso8601_ms(acquired_at_ms);
  return j.dump(2);
}

SceneSpec SceneSpec::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scene spec parse error: ") + e.what());
  }
  SceneSpec spec;
  try {
    spec.seed = j.value("seed", spec.seed);
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    spec.background_mean_nw = j.value("background_mean_nw", spec.background_mean_nw);
    spec.background_noise_sigma_nw =
        j.value("background_noise_sigma_nw", spec.background_noise_sigma_nw);
    spec.vessel_count = j.value("vessel_count", spec.vessel_count);
    if (j.contains("vessel_intensity_nw"))
      read_range(j["vessel_intensity_nw"], spec.vessel_intensity_lo_nw, spec.vessel_intensity_hi_nw);
    spec.min_separation_px = j.value("min_separation_px", spec.min_separation_px);
    spec.placement_margin_px = j.value("placement_margin_px", spec.placement_margin_px);
    for (const auto& fj : j.value("flare_sites", nlohmann::json::array())) {
      FlareSiteSpec f;
      f.lat = fj.at("lat").get<double>();
      f.lon = fj.at("lon").get<double>();
      f.intensity_nw = fj.value("intensity_nw", f.intensity_nw);
      f.radius_m = fj.value("radius_m", f.radius_m);
      spec.flare_sites.push_back(f);
    }
    if (j.contains("aurora") && !j["aurora"].is_null()) {
      AuroraSpec a;
      const auto& aj = j["aurora"];
      if (aj.contains("band_lat")) read_range(aj["band_lat"], a.band_lat_lo, a.band_lat_hi);
      if (aj.contains("glow_nw")) read_range(aj["glow_nw"], a.glow_lo_nw, a.glow_hi_nw);
      a.bump_count = aj.value("bump_count", a.bump_count);
      if (aj.contains("bump_nw")) read_range(aj["bump_nw"], a.bump_lo_nw, a.bump_hi_nw);
      spec.aurora = a;
    }
    for (const auto& sj : j.value("streaks", nlohmann::json::array())) {
      StreakSpec s;
      s.row = sj.at("row").get<int>();
      s.count = sj.value("count", s.count);
      if (sj.contains("intensity_nw")) read_range(sj["intensity_nw"], s.lo_nw, s.hi_nw);
      spec.streaks.push_back(s);
    }
    if (j.contains("smile") && !j["smile"].is_null()) {
      SmileSpec s;
      const auto& sj = j["smile"];
      s.margin_px = sj.value("margin_px", s.margin_px);
      s.noise_multiplier = sj.value("noise_multiplier", s.noise_multiplier);
      s.per_edge_count = sj.value("per_edge_count", s.per_edge_count);
      if (sj.contains("intensity_nw")) read_range(sj["intensity_nw"], s.lo_nw, s.hi_nw);
      spec.smile = s;
    }
    if (j.contains("clouds") && !j["clouds"].is_null()) {
      CloudSpec c;
      const auto& cj = j["clouds"];
      c.patch_count = cj.value("patch_count", c.patch_count);
      c.patch_radius_px = cj.value("patch_radius_px", c.patch_radius_px);
      if (cj.contains("glow_nw")) read_range(cj["glow_nw"], c.glow_lo_nw, c.glow_hi_nw);
      c.moonlight_level = cj.value("moonlight_level", c.moonlight_level);
      c.bump_count = cj.value("bump_count", c.bump_count);
      if (cj.contains("bump_nw")) read_range(cj["bump_nw"], c.bump_lo_nw, c.bump_hi_nw);
      spec.clouds = c;
    }
    for (const auto& ring : j.value("land_polygons", nlohmann::json::array())) {
      std::vector<GeoPoint> verts;
      for (const auto& v : ring) verts.push_back(GeoPoint{v[0].get<double>(), v[1].get<double>()});
      spec.land_polygons.push_back(GeoPolygon::from_vertices(std::move(verts), "land"));
    }
    if (j.contains("geo")) {
      spec.origin_lat = j["geo"].value("origin_lat", spec.origin_lat);
      spec.origin_lon = j["geo"].value("origin_lon", spec.origin_lon);
      spec.deg_per_px = j["geo"].value("deg_per_px", spec.deg_per_px);
    }
    spec.moonlight_base = j.value("moonlight_base", spec.moonlight_base);
    spec.frame_id = j.value("frame_id", spec.frame_id);
    spec.satellite_id = j.value("satellite_id", spec.satellite_id);
    if (j.contains("acquired_at"))
      spec.acquired_at_ms = parse_iso8601_ms(j["acquired_at"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scene spec field error: ") + e.what());
  }
  return spec;
}

SceneSpec SceneSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scene spec: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// Frame generation
// ---------------------------------------------------------------------------

namespace {

struct SceneBuilder {
  const SceneSpec& spec;
  RasterFrame frame;
  GroundTruth truth;
  std::vector<double> ambient;      // noise-free background level per pixel
  std::vector<char> vessel_exclude; // artifact regimes vessels must avoid
  std::vector<PlacedPoint> placed;
  std::vector<int> vessels_per_row;

  explicit SceneBuilder(const SceneSpec& s) : spec(s) {}

  size_t idx(int r, int c) const { return static_cast<size_t>(r) * spec.width + c; }

  void exclude_rect(int r0, int r1, int c0, int c1) {
    r0 = std::max(0, r0);
    c0 = std::max(0, c0);
    r1 = std::min(spec.height - 1, r1);
    c1 = std::min(spec.width - 1, c1);
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) vessel_exclude[idx(r, c)] = 1;
  }

  // Point sources sit on the deterministic ambient level so injected
  // prominence is exactly the requested intensity.
  void inject_point(int r, int c, double amp) {
    frame.planes[0][idx(r, c)] = static_cast<float>(ambient[idx(r, c)] + amp);
  }

  void add_truth(char prefix, TruthKind kind, int r, int c, double amp) {
    TruthRecord rec;
    rec.id = padded_id(prefix, truth.records.size());
    rec.kind = kind;
    rec.row = r;
    rec.col = c;
    rec.geo = pixel_to_geo(frame, r, c);
    rec.intensity_nw = amp;
    truth.records.push_back(std::move(rec));
  }
};

}  // namespace

std::pair<RasterFrame, GroundTruth> generate_frame(const SceneSpec& spec) {
  if (spec.width < 16 || spec.height < 16) throw ConfigError("scene too small");
  if (spec.vessel_count < 0 || spec.background_noise_sigma_nw < 0)
    throw ConfigError("scene counts and noise sigma must be >= 0");
  if (spec.vessel_intensity_hi_nw < spec.vessel_intensity_lo_nw ||
      spec.vessel_intensity_lo_nw < 0)
    throw ConfigError("vessel intensity range must be positive and ordered");

  SceneBuilder sb(spec);
  RasterFrame& frame = sb.frame;
  frame.frame_id = spec.frame_id.empty() ? "synth-" + std::to_string(spec.seed) : spec.frame_id;
  frame.satellite_id = spec.satellite_id;
  frame.acquired_at_ms = spec.acquired_at_ms;
  frame.width = spec.width;
  frame.height = spec.height;
  frame.channels = {std::string(kChannelRadiance), std::string(kChannelLandMask),
                    std::string(kChannelMoonlight), std::string(kChannelCloudMask)};
  frame.georef = GeoRef::Affine;
  frame.affine = {spec.origin_lon, spec.deg_per_px, 0.0, spec.origin_lat, 0.0, -spec.deg_per_px};
  frame.pixel_size_m = 750.0;
  const size_t n = static_cast<size_t>(spec.width) * spec.height;
  frame.planes.assign(4, std::vector<float>(n, 0.0f));

  sb.truth.frame_id = frame.frame_id;
  sb.truth.acquired_at_ms = frame.acquired_at_ms;
  sb.ambient.assign(n, spec.background_mean_nw);
  sb.vessel_exclude.assign(n, 0);
  sb.vessels_per_row.assign(static_cast<size_t>(spec.height), 0);

  Rng root(spec.seed);
  Rng rng_noise = root.fork(1);
  Rng rng_artifacts = root.fork(2);
  Rng rng_vessels = root.fork(3);

  auto& radiance = frame.planes[0];
  auto& land = frame.planes[1];
  auto& moonlight = frame.planes[2];
  auto& cloud = frame.planes[3];

  // Land mask from polygons.
  if (!spec.land_polygons.empty()) {
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        const GeoPoint g = pixel_to_geo(frame, r, c);
        for (const auto& poly : spec.land_polygons) {
          if (poly.contains(g)) {
            land[sb.idx(r, c)] = 1.0f;
            sb.vessel_exclude[sb.idx(r, c)] = 1;
            break;
          }
        }
      }
    }
  }

  // Moonlight field.
  const float moon_level = static_cast<float>(
      spec.clouds ? std::max(spec.moonlight_base, spec.clouds->moonlight_level)
                  : spec.moonlight_base);
  std::fill(moonlight.begin(), moonlight.end(), moon_level);

  // Aurora glow: smooth raised-cosine band over latitude rows.
  double aurora_amp = 0.0;
  if (spec.aurora) {
    aurora_amp = rng_artifacts.uniform(spec.aurora->glow_lo_nw, spec.aurora->glow_hi_nw);
    const double center = 0.5 * (spec.aurora->band_lat_lo + spec.aurora->band_lat_hi);
    const double half = 0.5 * std::abs(spec.aurora->band_lat_hi - spec.aurora->band_lat_lo);
    if (half > 0) {
      for (int r = 0; r < spec.height; ++r) {
        const double lat = spec.origin_lat - r * spec.deg_per_px;
        const double u = (lat - center) / half;
        if (std::abs(u) >= 1.0) continue;
        const double g = aurora_amp * 0.5 * (1.0 + std::cos(kPi * u));
        for (int c = 0; c < spec.width; ++c) sb.ambient[sb.idx(r, c)] += g;
        if (g > 0.5) sb.exclude_rect(r, r, 0, spec.width - 1);
      }
    }
  }

  // Moonlit cloud patches: cloud-mask disc with cosine skirt plus sheen glow.
  std::vector<std::pair<int, int>> patch_centers;
  if (spec.clouds && spec.clouds->patch_count > 0) {
    const auto& cl = *spec.clouds;
    const int rad = static_cast<int>(std::ceil(cl.patch_radius_px));
    const int lo_r = rad + 8, hi_r = spec.height - rad - 9;
    const int lo_c = rad + 8, hi_c = spec.width - rad - 9;
    if (hi_r <= lo_r || hi_c <= lo_c) throw ConfigError("cloud patches do not fit the frame");
    for (int i = 0; i < cl.patch_count; ++i) {
      int pr = 0, pc = 0;
      bool ok = false;
      for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
        pr = rng_artifacts.next_int(lo_r, hi_r);
        pc = rng_artifacts.next_int(lo_c, hi_c);
        ok = true;
        for (const auto& [qr, qc] : patch_centers) {
          const double d = std::hypot(pr - qr, pc - qc);
          if (d < 3.0 * cl.patch_radius_px) ok = false;
        }
      }
      if (!ok) throw Error("failed to place cloud patch after 1000 attempts");
      patch_centers.emplace_back(pr, pc);
      const double glow = rng_artifacts.uniform(cl.glow_lo_nw, cl.glow_hi_nw);
      const double r_in = cl.patch_radius_px;
      const double r_out = 1.3 * cl.patch_radius_px;
      const int span = static_cast<int>(std::ceil(r_out));
      for (int dr = -span; dr <= span; ++dr) {
        for (int dc = -span; dc <= span; ++dc) {
          const int r = pr + dr, c = pc + dc;
          if (r < 0 || r >= spec.height || c < 0 || c >= spec.width) continue;
          const double d = std::hypot(dr, dc);
          if (d >= r_out) continue;
          const double w = d <= r_in ? 1.0 : 0.5 * (1.0 + std::cos(kPi * (d - r_in) / (r_out - r_in)));
          const size_t i2 = sb.idx(r, c);
          cloud[i2] = std::max(cloud[i2], static_cast<float>(0.95 * w));
          sb.ambient[i2] += glow * w;
        }
      }
      sb.exclude_rect(pr - static_cast<int>(r_out) - 8, pr + static_cast<int>(r_out) + 8,
                      pc - static_cast<int>(r_out) - 8, pc + static_cast<int>(r_out) + 8);
    }
  }

  // Background noise (elevated inside the smile margins), then the ambient
  // field goes on top.
  const int smile_margin = spec.smile ? spec.smile->margin_px : 0;
  const double smile_mult = spec.smile ? spec.smile->noise_multiplier : 1.0;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      double sigma = spec.background_noise_sigma_nw;
      if (smile_margin > 0 && (c < smile_margin || c >= spec.width - smile_margin))
        sigma *= smile_mult;
      const double noise = sigma > 0.0 ? sigma * rng_noise.gaussian() : 0.0;
      radiance[sb.idx(r, c)] = static_cast<float>(sb.ambient[sb.idx(r, c)] + noise);
    }
  }

  // --- countable artifacts (ground-truthed) ---

  // Gas flares at fixed sites.
  for (const auto& site : spec.flare_sites) {
    const auto [frow, fcol] = geo_to_pixel(frame, make_geo_point(site.lat, site.lon));
    const int r = static_cast<int>(std::lround(frow));
    const int c = static_cast<int>(std::lround(fcol));
    if (!frame.in_bounds(r, c)) throw ConfigError("flare site outside frame");
    sb.inject_point(r, c, site.intensity_nw);
    sb.add_truth('f', TruthKind::Flare, r, c, site.intensity_nw);
    sb.placed.push_back({r, c, kArtifactClearancePx});
    sb.exclude_rect(r - 12, r + 12, c - 12, c + 12);
  }

  // Scan-line streaks: many bright pixels along one detector row.
  for (const auto& streak : spec.streaks) {
    if (streak.row < 0 || streak.row >= spec.height) throw ConfigError("streak row outside frame");
    for (int i = 0; i < streak.count; ++i) {
      int col = 0;
      bool ok = false;
      for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
        col = rng_artifacts.next_int(8, spec.width - 9);
        ok = clear_of(sb.placed, streak.row, col, kArtifactClearancePx);
      }
      if (!ok) throw Error("failed to place streak pixel after 1000 attempts");
      const double amp = rng_artifacts.uniform(streak.lo_nw, streak.hi_nw);
      sb.inject_point(streak.row, col, amp);
      sb.add_truth('s', TruthKind::Streak, streak.row, col, amp);
      sb.placed.push_back({streak.row, col, kArtifactClearancePx});
    }
    sb.exclude_rect(streak.row - 2, streak.row + 2, 0, spec.width - 1);
  }

  // Noise-smile spikes inside the margin columns.
  if (spec.smile && spec.smile->per_edge_count > 0) {
    const auto& sm = *spec.smile;
    if (sm.margin_px < 4 || sm.margin_px * 2 >= spec.width)
      throw ConfigError("smile margin does not fit the frame");
    for (int edge = 0; edge < 2; ++edge) {
      for (int i = 0; i < sm.per_edge_count; ++i) {
        int r = 0, c = 0;
        bool ok = false;
        for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
          r = rng_artifacts.next_int(8, spec.height - 9);
          const int off = rng_artifacts.next_int(2, sm.margin_px - 3);
          c = edge == 0 ? off : spec.width - 1 - off;
          ok = clear_of(sb.placed, r, c, kArtifactClearancePx);
        }
        if (!ok) throw Error("failed to place smile spike after 1000 attempts");
        const double amp = rng_artifacts.uniform(sm.lo_nw, sm.hi_nw);
        sb.inject_point(r, c, amp);
        sb.add_truth('m', TruthKind::Smile, r, c, amp);
        sb.placed.push_back({r, c, kArtifactClearancePx});
        // Vessels sharing a row with edge artifacts could trip the
        // scan-line statistic; keep those rows vessel-free.
        sb.exclude_rect(r, r, 0, spec.width - 1);
      }
    }
  }

  // Aurora bumps: diffuse maxima embedded deep in the glow band.
  if (spec.aurora && spec.aurora->bump_count > 0) {
    const auto& au = *spec.aurora;
    std::vector<int> band_rows;
    const double center = 0.5 * (au.band_lat_lo + au.band_lat_hi);
    const double half = 0.5 * std::abs(au.band_lat_hi - au.band_lat_lo);
    // Bumps only deep in the band (>= ~65% of peak glow) so their ring
    // background is glow-dominated and diffuseness stays high.
    for (int r = 8; r < spec.height - 8; ++r) {
      const double lat = spec.origin_lat - r * spec.deg_per_px;
      if (half > 0 && std::abs((lat - center) / half) < 0.35) band_rows.push_back(r);
    }
    if (band_rows.empty()) throw ConfigError("aurora band does not intersect the frame");
    const int lo_c = smile_margin + 8;
    const int hi_c = spec.width - smile_margin - 9;
    if (hi_c <= lo_c) throw ConfigError("aurora bumps do not fit between smile margins");
    for (int i = 0; i < au.bump_count; ++i) {
      int r = 0, c = 0;
      bool ok = false;
      for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
        r = band_rows[static_cast<size_t>(rng_artifacts.next_below(band_rows.size()))];
        c = rng_artifacts.next_int(lo_c, hi_c);
        ok = clear_of(sb.placed, r, c, kArtifactClearancePx);
      }
      if (!ok) throw Error("failed to place aurora bump after 1000 attempts");
      const double amp = rng_artifacts.uniform(au.bump_lo_nw, au.bump_hi_nw);
      sb.inject_point(r, c, amp);
      sb.add_truth('a', TruthKind::Aurora, r, c, amp);
      sb.placed.push_back({r, c, kArtifactClearancePx});
    }
  }

  // Cloud sheen bumps inside patches.
  if (spec.clouds && spec.clouds->bump_count > 0 && !patch_centers.empty()) {
    const auto& cl = *spec.clouds;
    const int wander = std::max(1, static_cast<int>(cl.patch_radius_px * 0.6));
    for (int i = 0; i < cl.bump_count; ++i) {
      int r = 0, c = 0;
      bool ok = false;
      for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
        const auto& [pr, pc] = patch_centers[static_cast<size_t>(
            rng_artifacts.next_below(patch_centers.size()))];
        r = pr + rng_artifacts.next_int(-wander, wander);
        c = pc + rng_artifacts.next_int(-wander, wander);
        ok = frame.in_bounds(r, c) && cloud[sb.idx(r, c)] > 0.6f &&
             clear_of(sb.placed, r, c, kArtifactClearancePx);
      }
      if (!ok) throw Error("failed to place cloud bump after 1000 attempts");
      const double amp = rng_artifacts.uniform(cl.bump_lo_nw, cl.bump_hi_nw);
      sb.inject_point(r, c, amp);
      sb.add_truth('c', TruthKind::Cloud, r, c, amp);
      sb.placed.push_back({r, c, kArtifactClearancePx});
    }
  }

  // --- vessels, clear of every artifact regime ---
  const int margin = std::max(spec.placement_margin_px, smile_margin + 8);
  if (spec.vessel_count > 0 && (spec.width - 2 * margin < 8 || spec.height - 2 * margin < 8))
    throw ConfigError("placement margin leaves no room for vessels");
  for (int i = 0; i < spec.vessel_count; ++i) {
    int r = 0, c = 0;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
      r = rng_vessels.next_int(margin, spec.height - margin - 1);
      c = rng_vessels.next_int(margin, spec.width - margin - 1);
      ok = !sb.vessel_exclude[sb.idx(r, c)] &&
           sb.vessels_per_row[static_cast<size_t>(r)] < 2 &&
           clear_of(sb.placed, r, c, spec.min_separation_px);
    }
    if (!ok)
      throw Error("failed to place vessel " + std::to_string(i) + " after 1000 attempts");
    const double amp = rng_vessels.uniform(spec.vessel_intensity_lo_nw, spec.vessel_intensity_hi_nw);
    sb.inject_point(r, c, amp);
    // 1-2 px point spread: 30% of vessels glow into the neighboring pixel.
    if (rng_vessels.next_double() < 0.30 && frame.in_bounds(r, c + 1))
      sb.inject_point(r, c + 1, 0.6 * amp);
    sb.add_truth('v', TruthKind::Vessel, r, c, amp);
    sb.placed.push_back({r, c, spec.min_separation_px});
    sb.vessels_per_row[static_cast<size_t>(r)] += 1;
  }

  validate_frame(frame);
  return {std::move(frame), std::move(sb.truth)};
}

std::vector<AisPosition> generate_ais(const GroundTruth& truth, double jitter_m,
                                      double dark_fraction, uint64_t seed) {
  if (!(dark_fraction >= 0.0 && dark_fraction <= 1.0))
    throw ConfigError("dark_fraction must be in [0,1]");
  const auto vessels = truth.of_kind(TruthKind::Vessel);
  const auto dark_count = static_cast<size_t>(std::llround(
      static_cast<double>(vessels.size()) * dark_fraction));

  // Deterministic dark subset: Fisher-Yates over vessel indices.
  Rng rng(seed);
  std::vector<size_t> order(vessels.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<size_t>(rng.next_below(i))]);

  std::vector<char> dark(vessels.size(), 0);
  for (size_t i = 0; i < dark_count && i < order.size(); ++i) dark[order[i]] = 1;

  std::vector<AisPosition> reports;
  for (size_t i = 0; i < vessels.size(); ++i) {
    if (dark[i]) continue;
    const auto& v = vessels[i];
    AisPosition pos;
    pos.vessel_id = v.id;
    pos.ts_ms = truth.acquired_at_ms;
    double lat = v.geo.lat_deg;
    double lon = v.geo.lon_deg;
    if (jitter_m > 0.0) {
      const double theta = rng.uniform(0.0, 2.0 * kPi);
      const double radius = jitter_m * std::sqrt(rng.next_double());
      lat += radius * std::cos(theta) / kMetersPerDegLat;
      lon += radius * std::sin(theta) /
             (kMetersPerDegLat * std::cos(v.geo.lat_deg * kPi / 180.0));
    }
    pos.geo = make_geo_point(lat, lon);
    reports.push_back(std::move(pos));
  }
  return reports;
}

SceneSpec default_low_lat_scene(uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  Rng rng(seed ^ 0x10117a7c5ce6e5ULL);
  spec.origin_lat = 30.0 + static_cast<double>(rng.next_below(5));
  spec.origin_lon = -158.0 + static_cast<double>(rng.next_below(9));

  FlareSiteSpec flare;
  const int fr = rng.next_int(150, spec.height - 150);
  const int fc = rng.next_int(150, spec.width - 150);
  flare.lat = spec.origin_lat - fr * spec.deg_per_px;
  flare.lon = spec.origin_lon + fc * spec.deg_per_px;
  flare.intensity_nw = rng.uniform(40.0, 120.0);
  flare.radius_m = 1500.0;
  spec.flare_sites.push_back(flare);

  StreakSpec streak;
  streak.row = rng.next_int(120, spec.height - 120);
  spec.streaks.push_back(streak);

  spec.smile = SmileSpec{};
  spec.clouds = CloudSpec{};
  return spec;
}

SceneSpec default_high_lat_scene(uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  Rng rng(seed ^ 0x811a715c3eULL);
  spec.origin_lat = 65.3 + 0.05 * static_cast<double>(rng.next_below(5));
  spec.origin_lon = -40.0 + static_cast<double>(rng.next_below(11));

  spec.aurora = AuroraSpec{};
  StreakSpec streak;
  streak.row = rng.next_int(spec.height - 300, spec.height - 120);  // below the band
  spec.streaks.push_back(streak);
  spec.smile = SmileSpec{};
  return spec;
}

}  // namespace nightwatch
