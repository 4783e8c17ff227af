#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nightwatch/geo.hpp"

namespace nightwatch {

// Channel name registry. A frame may carry more, but these are the names the
// pipeline understands.
inline constexpr std::string_view kChannelRadiance = "radiance";    // nanowatts/cm^2/sr
inline constexpr std::string_view kChannelLandMask = "land_mask";   // 1 = land
inline constexpr std::string_view kChannelMoonlight = "moonlight";  // fraction 0-1
inline constexpr std::string_view kChannelCloudMask = "cloud_mask"; // confidence 0-1

enum class GeoRef { Affine, Grid };

/// Multi-channel georeferenced image with acquisition metadata. Immutable
/// after load by convention; concurrent readers are safe.
///
/// On disk: `<base>.json` sidecar header plus `<base>.planes`, raw
/// little-endian float32 planes concatenated channel-major (row-major within
/// a plane). Grid-georeferenced frames append a lat plane and a lon plane
/// after the channel planes.
struct RasterFrame {
  std::string frame_id;
  std::string satellite_id;
  int64_t acquired_at_ms = 0;
  int width = 0;
  int height = 0;
  std::vector<std::string> channels;
  GeoRef georef = GeoRef::Affine;
  // lon = a[0] + col*a[1] + row*a[2]; lat = a[3] + col*a[4] + row*a[5]
  // evaluated at pixel centers (integer row/col).
  std::array<double, 6> affine{0, 1, 0, 0, 0, -1};
  std::vector<float> lat_grid;  // height*width when georef == Grid
  std::vector<float> lon_grid;
  std::vector<std::vector<float>> planes;  // one per channel, height*width
  double pixel_size_m = 750.0;

  int channel_index(std::string_view name) const;
  bool has_channel(std::string_view name) const { return channel_index(name) >= 0; }
  /// Throws FormatError when the channel is absent.
  const std::vector<float>& plane(std::string_view name) const;
  std::vector<float>& plane(std::string_view name);

  float at(int channel, int row, int col) const {
    return planes[static_cast<size_t>(channel)][static_cast<size_t>(row) * width + col];
  }
  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }
};

/// Square odd-sized window cut from a frame, one plane per channel,
/// out-of-frame pixels set to the fill value.
struct Crop {
  int center_row = 0;
  int center_col = 0;
  int size = 0;
  float fill = 0.0f;
  std::vector<std::string> channels;
  std::vector<std::vector<float>> planes;  // size*size each

  float at(int channel, int r, int c) const {
    return planes[static_cast<size_t>(channel)][static_cast<size_t>(r) * size + c];
  }
};

/// Validate invariants (dimensions, plane sizes, radiance presence,
/// pixel_size_m). Throws FormatError / ConfigError on violation.
void validate_frame(const RasterFrame& frame);

/// `path` may be the header path (`x.json`), the planes path, or the bare
/// base. Writes `<base>.json` + `<base>.planes`.
void write_frame(const RasterFrame& frame, const std::string& path);

/// Load and fully validate a frame container. NaNs are permitted in planes
/// (missing data). Throws FormatError on size mismatches, a missing radiance
/// channel, or an unknown header version.
RasterFrame load_frame(const std::string& path);

/// Geolocate a pixel center. Fractional row/col accepted.
GeoPoint pixel_to_geo(const RasterFrame& frame, double row, double col);

/// Inverse mapping; returns fractional (row, col). Throws Error when the
/// point falls outside the frame footprint.
std::pair<double, double> geo_to_pixel(const RasterFrame& frame, const GeoPoint& p);

/// Extract a size x size crop (size odd, >= 1) centered on a pixel.
/// Out-of-frame pixels read as `fill`. Throws ConfigError on even size.
Crop extract_crop(const RasterFrame& frame, int center_row, int center_col, int size,
                  float fill = 0.0f);

/// Crops reuse the container format for persistence.
void write_crop(const Crop& crop, const GeoPoint& center_geo, const std::string& frame_id,
                const std::string& path);

}  // namespace nightwatch
