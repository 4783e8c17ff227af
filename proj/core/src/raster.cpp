#include "nightwatch/raster.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "nightwatch/errors.hpp"
#include "nightwatch/timeutil.hpp"

namespace nightwatch {

namespace {

constexpr int kHeaderVersion = 1;

std::string strip_suffix(const std::string& path) {
  if (path.ends_with(".json")) return path.substr(0, path.size() - 5);
  if (path.ends_with(".planes")) return path.substr(0, path.size() - 7);
  return path;
}

void write_f32_le(std::ofstream& out, const std::vector<float>& values) {
  static_assert(sizeof(float) == 4);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * 4));
  } else {
    for (float v : values) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      const char bytes[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8),
                             static_cast<char>(bits >> 16), static_cast<char>(bits >> 24)};
      out.write(bytes, 4);
    }
  }
}

void read_f32_le(std::ifstream& in, std::vector<float>& values, size_t count,
                 const std::string& what) {
  values.resize(count);
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * 4));
  } else {
    for (size_t i = 0; i < count; ++i) {
      unsigned char bytes[4];
      in.read(reinterpret_cast<char*>(bytes), 4);
      const uint32_t bits = static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
                            (static_cast<uint32_t>(bytes[2]) << 16) |
                            (static_cast<uint32_t>(bytes[3]) << 24);
      std::memcpy(&values[i], &bits, 4);
    }
  }
  if (!in) throw FormatError("short read while loading " + what);
}

}  // namespace

int RasterFrame::channel_index(std::string_view name) const {
  for (size_t i = 0; i < channels.size(); ++i)
    if (channels[i] == name) return static_cast<int>(i);
  return -1;
}

const std::vector<float>& RasterFrame::plane(std::string_view name) const {
  const int idx = channel_index(name);
  if (idx < 0) throw FormatError("frame '" + frame_id + "' has no channel '" + std::string(name) + "'");
  return planes[static_cast<size_t>(idx)];
}

std::vector<float>& RasterFrame::plane(std::string_view name) {
  const int idx = channel_index(name);
  if (idx < 0) throw FormatError("frame '" + frame_id + "' has no channel '" + std::string(name) + "'");
  return planes[static_cast<size_t>(idx)];
}

void validate_frame(const RasterFrame& frame) {
  if (frame.width <= 0 || frame.height <= 0)
    throw FormatError("frame '" + frame.frame_id + "': non-positive dimensions");
  if (!(frame.pixel_size_m > 0.0))
    throw FormatError("frame '" + frame.frame_id + "': pixel_size_m must be > 0");
  if (frame.channels.empty()) throw FormatError("frame '" + frame.frame_id + "': no channels");
  if (frame.planes.size() != frame.channels.size())
    throw FormatError("frame '" + frame.frame_id + "': " + std::to_string(frame.planes.size()) +
                      " planes for " + std::to_string(frame.channels.size()) + " channels");
  const size_t n = static_cast<size_t>(frame.width) * frame.height;
  for (size_t i = 0; i < frame.planes.size(); ++i)
    if (frame.planes[i].size() != n)
      throw FormatError("frame '" + frame.frame_id + "': plane '" + frame.channels[i] +
                        "' has wrong size");
  if (frame.channel_index(kChannelRadiance) < 0)
    throw FormatError("frame '" + frame.frame_id + "': missing required 'radiance' channel");
  if (frame.georef == GeoRef::Grid && (frame.lat_grid.size() != n || frame.lon_grid.size() != n))
    throw FormatError("frame '" + frame.frame_id + "': grid georeference planes have wrong size");
}

void write_frame(const RasterFrame& frame, const std::string& path) {
  validate_frame(frame);
  const std::string base = strip_suffix(path);

  nlohmann::json header;
  header["version"] = kHeaderVersion;
  header["frame_id"] = frame.frame_id;
  header["satellite_id"] = frame.satellite_id;
  header["acquired_at"] = format_iso8601_ms(frame.acquired_at_ms);
  header["width"] = frame.width;
  header["height"] = frame.height;
  header["channels"] = frame.channels;
  header["pixel_size_m"] = frame.pixel_size_m;
  if (frame.georef == GeoRef::Affine) {
    header["geotransform"] = {{"type", "affine"}, {"coefficients", frame.affine}};
  } else {
    header["geotransform"] = {{"type", "grid"}};
  }

  std::ofstream planes(base + ".planes", std::ios::binary | std::ios::trunc);
  if (!planes) throw FormatError("cannot write " + base + ".planes");
  for (const auto& plane : frame.planes) write_f32_le(planes, plane);
  if (frame.georef == GeoRef::Grid) {
    write_f32_le(planes, frame.lat_grid);
    write_f32_le(planes, frame.lon_grid);
  }
  planes.close();
  if (!planes) throw FormatError("failed writing " + base + ".planes");

  std::ofstream hdr(base + ".json", std::ios::trunc);
  if (!hdr) throw FormatError("cannot write " + base + ".json");
  hdr << header.dump(2) << "\n";
  hdr.close();
  if (!hdr) throw FormatError("failed writing " + base + ".json");
}

RasterFrame load_frame(const std::string& path) {
  const std::string base = strip_suffix(path);
  std::ifstream hdr_in(base + ".json");
  if (!hdr_in) throw FormatError("cannot open frame header: " + base + ".json");
  nlohmann::json header;
  try {
    hdr_in >> header;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("frame header parse error in " + base + ".json: " + e.what());
  }

  const int version = header.value("version", -1);
  if (version != kHeaderVersion)
    throw FormatError("unknown frame header version " + std::to_string(version) + " in " + base +
                      ".json");

  RasterFrame frame;
  try {
    frame.frame_id = header.at("frame_id").get<std::string>();
    frame.satellite_id = header.value("satellite_id", std::string{});
    frame.acquired_at_ms = parse_iso8601_ms(header.at("acquired_at").get<std::string>());
    frame.width = header.at("width").get<int>();
    frame.height = header.at("height").get<int>();
    frame.channels = header.at("channels").get<std::vector<std::string>>();
    frame.pixel_size_m = header.at("pixel_size_m").get<double>();
    const auto& geo = header.at("geotransform");
    const std::string type = geo.at("type").get<std::string>();
    if (type == "affine") {
      frame.georef = GeoRef::Affine;
      const auto coeff = geo.at("coefficients").get<std::vector<double>>();
      if (coeff.size() != 6) throw FormatError("affine geotransform needs 6 coefficients");
      std::copy(coeff.begin(), coeff.end(), frame.affine.begin());
    } else if (type == "grid") {
      frame.georef = GeoRef::Grid;
    } else {
      throw FormatError("unknown georeference type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("frame header field error in " + base + ".json: " + e.what());
  }

  if (frame.width <= 0 || frame.height <= 0)
    throw FormatError("frame '" + frame.frame_id + "': non-positive dimensions");

  const size_t plane_px = static_cast<size_t>(frame.width) * frame.height;
  const size_t plane_count = frame.channels.size() + (frame.georef == GeoRef::Grid ? 2 : 0);
  const auto expected_bytes = static_cast<uintmax_t>(plane_px) * 4 * plane_count;

  const std::string planes_path = base + ".planes";
  std::error_code ec;
  const uintmax_t actual_bytes = std::filesystem::file_size(planes_path, ec);
  if (ec) throw FormatError("cannot stat plane file: " + planes_path);
  if (actual_bytes != expected_bytes)
    throw FormatError("plane file size mismatch for " + planes_path + ": expected " +
                      std::to_string(expected_bytes) + " bytes (" + std::to_string(plane_count) +
                      " planes), found " + std::to_string(actual_bytes));

  std::ifstream planes_in(planes_path, std::ios::binary);
  if (!planes_in) throw FormatError("cannot open plane file: " + planes_path);
  frame.planes.resize(frame.channels.size());
  for (size_t i = 0; i < frame.channels.size(); ++i)
    read_f32_le(planes_in, frame.planes[i], plane_px, "plane '" + frame.channels[i] + "'");
  if (frame.georef == GeoRef::Grid) {
    read_f32_le(planes_in, frame.lat_grid, plane_px, "lat grid");
    read_f32_le(planes_in, frame.lon_grid, plane_px, "lon grid");
  }

  validate_frame(frame);
  return frame;
}

GeoPoint pixel_to_geo(const RasterFrame& frame, double row, double col) {
  if (frame.georef == GeoRef::Affine) {
    const auto& a = frame.affine;
    const double lon = a[0] + col * a[1] + row * a[2];
    const double lat = a[3] + col * a[4] + row * a[5];
    return make_geo_point(lat, lon);
  }
  const int r = static_cast<int>(std::lround(row));
  const int c = static_cast<int>(std::lround(col));
  if (!frame.in_bounds(r, c))
    throw Error("pixel (" + std::to_string(row) + "," + std::to_string(col) +
                ") outside grid-georeferenced frame");
  const size_t idx = static_cast<size_t>(r) * frame.width + c;
  return make_geo_point(frame.lat_grid[idx], frame.lon_grid[idx]);
}

std::pair<double, double> geo_to_pixel(const RasterFrame& frame, const GeoPoint& p) {
  if (frame.georef == GeoRef::Affine) {
    const auto& a = frame.affine;
    const double det = a[1] * a[5] - a[2] * a[4];
    if (std::abs(det) < 1e-30) throw Error("degenerate affine geotransform");
    // Unwrap the query longitude toward the frame origin so footprints that
    // straddle the antimeridian invert correctly.
    double lon = p.lon_deg;
    while (lon - a[0] > 180.0) lon -= 360.0;
    while (lon - a[0] < -180.0) lon += 360.0;
    const double dx = lon - a[0];
    const double dy = p.lat_deg - a[3];
    const double col = (dx * a[5] - dy * a[2]) / det;
    const double row = (dy * a[1] - dx * a[4]) / det;
    if (row < -0.5 || row > frame.height - 0.5 || col < -0.5 || col > frame.width - 0.5)
      throw Error("point (" + std::to_string(p.lat_deg) + "," + std::to_string(p.lon_deg) +
                  ") outside frame footprint");
    return {row, col};
  }
  // Grid frames: nearest-pixel scan. Adequate for the test-scale frames that
  // use grid georeferencing.
  double best = std::numeric_limits<double>::infinity();
  int best_r = -1, best_c = -1;
  for (int r = 0; r < frame.height; ++r) {
    for (int c = 0; c < frame.width; ++c) {
      const size_t idx = static_cast<size_t>(r) * frame.width + c;
      const double dlat = frame.lat_grid[idx] - p.lat_deg;
      double dlon = std::abs(frame.lon_grid[idx] - p.lon_deg);
      if (dlon > 180.0) dlon = 360.0 - dlon;
      const double d2 = dlat * dlat + dlon * dlon;
      if (d2 < best) {
        best = d2;
        best_r = r;
        best_c = c;
      }
    }
  }
  const size_t idx = static_cast<size_t>(best_r) * frame.width + best_c;
  const double px_deg = frame.pixel_size_m / 111194.926644559;  // meters per degree latitude
  const double dlat = std::abs(frame.lat_grid[idx] - p.lat_deg);
  if (dlat > 2.0 * px_deg) throw Error("point outside grid frame footprint");
  return {static_cast<double>(best_r), static_cast<double>(best_c)};
}

Crop extract_crop(const RasterFrame& frame, int center_row, int center_col, int size, float fill) {
  if (size < 1 || size % 2 == 0)
    throw ConfigError("crop size must be odd and >= 1, got " + std::to_string(size));
  Crop crop;
  crop.center_row = center_row;
  crop.center_col = center_col;
  crop.size = size;
  crop.fill = fill;
  crop.channels = frame.channels;
  crop.planes.assign(frame.channels.size(),
                     std::vector<float>(static_cast<size_t>(size) * size, fill));
  const int half = size / 2;
  const int r0 = std::max(0, center_row - half);
  const int r1 = std::min(frame.height - 1, center_row + half);
  const int c0 = std::max(0, center_col - half);
  const int c1 = std::min(frame.width - 1, center_col + half);
  for (size_t ch = 0; ch < frame.planes.size(); ++ch) {
    const auto& src = frame.planes[ch];
    auto& dst = crop.planes[ch];
    for (int r = r0; r <= r1; ++r) {
      const size_t src_off = static_cast<size_t>(r) * frame.width;
      const size_t dst_off = static_cast<size_t>(r - center_row + half) * size;
      for (int c = c0; c <= c1; ++c)
        dst[dst_off + (c - center_col + half)] = src[src_off + c];
    }
  }
  return crop;
}

void write_crop(const Crop& crop, const GeoPoint& center_geo, const std::string& frame_id,
                const std::string& path) {
  RasterFrame mini;
  mini.frame_id = frame_id;
  mini.satellite_id = "crop";
  mini.width = crop.size;
  mini.height = crop.size;
  mini.channels = crop.channels;
  mini.planes = crop.planes;
  mini.pixel_size_m = 750.0;
  // Degenerate but honest georeference: every crop pixel maps near the center
  // point; the crop is a visual audit artifact, not analysis input.
  mini.affine = {center_geo.lon_deg, 1e-9, 0.0, center_geo.lat_deg, 0.0, -1e-9};
  write_frame(mini, path);
}

}  // namespace nightwatch
