#include "nightwatch/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "nightwatch/errors.hpp"

namespace nightwatch {

const char* to_string(SuppressionRule rule) {
  switch (rule) {
    case SuppressionRule::Land: return "LAND";
    case SuppressionRule::GasFlare: return "GAS_FLARE";
    case SuppressionRule::MoonlitCloud: return "MOONLIT_CLOUD";
    case SuppressionRule::Aurora: return "AURORA";
    case SuppressionRule::Saa: return "SAA";
    case SuppressionRule::Scanline: return "SCANLINE";
    case SuppressionRule::NoiseSmile: return "NOISE_SMILE";
  }
  return "?";
}

SuppressionRule suppression_rule_from_string(const std::string& name) {
  if (name == "LAND") return SuppressionRule::Land;
  if (name == "GAS_FLARE") return SuppressionRule::GasFlare;
  if (name == "MOONLIT_CLOUD") return SuppressionRule::MoonlitCloud;
  if (name == "AURORA") return SuppressionRule::Aurora;
  if (name == "SAA") return SuppressionRule::Saa;
  if (name == "SCANLINE") return SuppressionRule::Scanline;
  if (name == "NOISE_SMILE") return SuppressionRule::NoiseSmile;
  throw FormatError("unknown suppression rule '" + name + "'");
}

std::vector<FlaggedCandidate> to_flagged(const std::vector<LightCandidate>& cands) {
  std::vector<FlaggedCandidate> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back(FlaggedCandidate{c, {}});
  return out;
}

FlareGazetteer FlareGazetteer::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open gazetteer: " + path);
  FlareGazetteer gaz;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Site site;
      site.geo = make_geo_point(j.at("lat").get<double>(), j.at("lon").get<double>());
      site.radius_m = j.at("radius_m").get<double>();
      if (!(site.radius_m > 0.0)) throw FormatError("radius_m must be > 0");
      gaz.sites.push_back(site);
    } catch (const std::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": bad gazetteer record: " +
                        e.what());
    }
  }
  return gaz;
}

void FlareGazetteer::save_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write gazetteer: " + path);
  for (const auto& s : sites) {
    nlohmann::json j{{"lat", s.geo.lat_deg}, {"lon", s.geo.lon_deg}, {"radius_m", s.radius_m}};
    out << j.dump() << "\n";
  }
}

namespace {

float channel_value(const RasterFrame& frame, std::string_view channel, const LightCandidate& c) {
  return frame.plane(channel)[static_cast<size_t>(c.row) * frame.width + c.col];
}

}  // namespace

std::vector<FlaggedCandidate> mask_land(std::vector<FlaggedCandidate> cands,
                                        const RasterFrame& frame) {
  const auto& mask = frame.plane(kChannelLandMask);  // throws when absent
  for (auto& fc : cands) {
    const float v = mask[static_cast<size_t>(fc.candidate.row) * frame.width + fc.candidate.col];
    if (v > 0.5f) fc.flags.push_back({SuppressionRule::Land, "on land mask"});
  }
  return cands;
}

std::vector<FlaggedCandidate> suppress_gas_flares(std::vector<FlaggedCandidate> cands,
                                                  const FlareGazetteer& gazetteer) {
  for (auto& fc : cands) {
    for (const auto& site : gazetteer.sites) {
      const double d = haversine_m(fc.candidate.geo, site.geo);
      if (d <= site.radius_m) {
        std::ostringstream detail;
        detail << "within " << site.radius_m << " m of flare site (" << site.geo.lat_deg << ","
               << site.geo.lon_deg << "), d=" << d;
        fc.flags.push_back({SuppressionRule::GasFlare, detail.str()});
        break;
      }
    }
  }
  return cands;
}

std::vector<FlaggedCandidate> suppress_moonlit_clouds(std::vector<FlaggedCandidate> cands,
                                                      const RasterFrame& frame,
                                                      double moon_thresh, double cloud_thresh,
                                                      double snr_keep) {
  // Validate channel presence up front so an empty candidate list still
  // reports a misconfigured frame.
  frame.plane(kChannelMoonlight);
  frame.plane(kChannelCloudMask);
  for (auto& fc : cands) {
    const double moon = channel_value(frame, kChannelMoonlight, fc.candidate);
    const double cloud = channel_value(frame, kChannelCloudMask, fc.candidate);
    if (cloud >= cloud_thresh && moon >= moon_thresh && fc.candidate.snr < snr_keep) {
      std::ostringstream detail;
      detail << "cloud=" << cloud << " moon=" << moon << " snr=" << fc.candidate.snr;
      fc.flags.push_back({SuppressionRule::MoonlitCloud, detail.str()});
    }
  }
  return cands;
}

std::vector<FlaggedCandidate> suppress_aurora(std::vector<FlaggedCandidate> cands,
                                              const RasterFrame& frame, double lat_gate_deg,
                                              double diffuseness_thresh) {
  frame.plane(kChannelRadiance);
  for (auto& fc : cands) {
    const auto& c = fc.candidate;
    if (std::abs(c.geo.lat_deg) < lat_gate_deg) continue;
    const double diffuseness =
        c.peak_radiance > 0.0f
            ? std::max(0.0, static_cast<double>(c.local_background) / c.peak_radiance)
            : 0.0;
    if (diffuseness >= diffuseness_thresh) {
      std::ostringstream detail;
      detail << "lat=" << c.geo.lat_deg << " diffuseness=" << diffuseness;
      fc.flags.push_back({SuppressionRule::Aurora, detail.str()});
    }
  }
  return cands;
}

std::vector<FlaggedCandidate> suppress_saa(std::vector<FlaggedCandidate> cands,
                                           const GeoPolygon& saa_polygon, double snr_keep) {
  for (auto& fc : cands) {
    if (fc.candidate.snr >= snr_keep) continue;
    if (saa_polygon.contains(fc.candidate.geo)) {
      std::ostringstream detail;
      detail << "snr=" << fc.candidate.snr << " inside " << saa_polygon.name();
      fc.flags.push_back({SuppressionRule::Saa, detail.str()});
    }
  }
  return cands;
}

double binomial_tail(int k, int n, double p) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  double tail = 0.0;
  for (int i = k; i <= n; ++i) {
    const double log_choose =
        std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    tail += std::exp(log_choose + i * log_p + (n - i) * log_q);
  }
  return std::min(1.0, tail);
}

std::vector<FlaggedCandidate> scanline_test(std::vector<FlaggedCandidate> cands,
                                            const RasterFrame& frame, double p_value_thresh) {
  const int n = static_cast<int>(cands.size());
  const int h = frame.height;
  if (n == 0 || h <= 1) return cands;
  std::map<int, int> per_row;
  for (const auto& fc : cands) per_row[fc.candidate.row] += 1;

  std::map<int, double> flagged_rows;
  for (const auto& [row, k] : per_row) {
    const double tail = binomial_tail(k, n, 1.0 / static_cast<double>(h));
    const double corrected = static_cast<double>(h) * tail;  // Bonferroni across rows
    if (corrected < p_value_thresh) flagged_rows[row] = corrected;
  }
  for (auto& fc : cands) {
    const auto it = flagged_rows.find(fc.candidate.row);
    if (it == flagged_rows.end()) continue;
    std::ostringstream detail;
    detail << per_row[fc.candidate.row] << "/" << n << " candidates on row "
           << fc.candidate.row << ", corrected p=" << it->second;
    fc.flags.push_back({SuppressionRule::Scanline, detail.str()});
  }
  return cands;
}

std::vector<FlaggedCandidate> suppress_noise_smile(std::vector<FlaggedCandidate> cands,
                                                   const RasterFrame& frame, int edge_margin_px,
                                                   double snr_keep) {
  for (auto& fc : cands) {
    const int col = fc.candidate.col;
    const bool at_edge = col < edge_margin_px || col >= frame.width - edge_margin_px;
    if (at_edge && fc.candidate.snr < snr_keep) {
      std::ostringstream detail;
      detail << "col=" << col << " snr=" << fc.candidate.snr;
      fc.flags.push_back({SuppressionRule::NoiseSmile, detail.str()});
    }
  }
  return cands;
}

GeoPolygon Stage2Config::default_saa_polygon() {
  return GeoPolygon::from_vertices(
      {
          GeoPoint{0.0, -90.0},
          GeoPoint{0.0, 40.0},
          GeoPoint{-50.0, 40.0},
          GeoPoint{-50.0, -90.0},
      },
      "saa_default");
}

Stage2Result run_stage2(const std::vector<LightCandidate>& cands, const RasterFrame& frame,
                        const Stage2Config& config) {
  auto flagged = to_flagged(cands);
  flagged = mask_land(std::move(flagged), frame);
  flagged = suppress_gas_flares(std::move(flagged), config.gazetteer);
  if (config.saa_polygon)
    flagged = suppress_saa(std::move(flagged), *config.saa_polygon, config.saa_snr_keep);
  flagged = scanline_test(std::move(flagged), frame, config.scanline_p_value);
  flagged = suppress_noise_smile(std::move(flagged), frame, config.noise_smile_margin_px,
                                 config.noise_smile_snr_keep);
  flagged = suppress_moonlit_clouds(std::move(flagged), frame, config.moon_thresh,
                                    config.cloud_thresh, config.cloud_snr_keep);
  flagged = suppress_aurora(std::move(flagged), frame, config.aurora_lat_gate_deg,
                            config.aurora_diffuseness_thresh);

  Stage2Result result;
  for (auto& fc : flagged) {
    if (fc.flags.empty())
      result.kept.push_back(std::move(fc));
    else
      result.suppressed.push_back(std::move(fc));
  }
  return result;
}

}  // namespace nightwatch
