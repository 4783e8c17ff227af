#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nightwatch/errors.hpp"
#include "nightwatch/raster.hpp"
#include "nightwatch/rng.hpp"
#include "oracles/test_support.hpp"

using namespace nightwatch;
namespace fs = std::filesystem;

namespace {

RasterFrame random_frame(Rng& rng, bool grid_georef) {
  RasterFrame frame;
  frame.frame_id = "rand-" + std::to_string(rng.next_below(1 << 30));
  frame.satellite_id = "T";
  frame.acquired_at_ms = 1700000000000 + static_cast<int64_t>(rng.next_below(1000000)) * 250;
  frame.width = 3 + static_cast<int>(rng.next_below(12));
  frame.height = 3 + static_cast<int>(rng.next_below(12));
  frame.channels = {"radiance", "land_mask"};
  if (rng.next_double() < 0.5) frame.channels.push_back("moonlight");
  frame.pixel_size_m = 750.0;
  const size_t n = static_cast<size_t>(frame.width) * frame.height;
  for (const auto& unused : frame.channels) {
    (void)unused;
    std::vector<float> plane(n);
    for (auto& v : plane) {
      v = static_cast<float>(rng.uniform(-100, 100));
      if (rng.next_double() < 0.02) v = std::nanf("");
    }
    frame.planes.push_back(std::move(plane));
  }
  if (grid_georef) {
    frame.georef = GeoRef::Grid;
    frame.lat_grid.resize(n);
    frame.lon_grid.resize(n);
    for (int r = 0; r < frame.height; ++r) {
      for (int c = 0; c < frame.width; ++c) {
        frame.lat_grid[static_cast<size_t>(r) * frame.width + c] =
            static_cast<float>(40.0 - 0.007 * r + 1e-4 * c);
        frame.lon_grid[static_cast<size_t>(r) * frame.width + c] =
            static_cast<float>(-120.0 + 0.007 * c + 2e-4 * r);
      }
    }
  } else {
    frame.georef = GeoRef::Affine;
    frame.affine = {rng.uniform(-150, 150), 0.0067, rng.uniform(-1e-4, 1e-4),
                    rng.uniform(-60, 60), rng.uniform(-1e-4, 1e-4), -0.0067};
  }
  return frame;
}

bool planes_identical(const RasterFrame& a, const RasterFrame& b) {
  if (a.planes.size() != b.planes.size()) return false;
  for (size_t i = 0; i < a.planes.size(); ++i) {
    if (a.planes[i].size() != b.planes[i].size()) return false;
    for (size_t k = 0; k < a.planes[i].size(); ++k) {
      const float x = a.planes[i][k], y = b.planes[i][k];
      if (std::isnan(x) != std::isnan(y)) return false;
      if (!std::isnan(x) && x != y) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("frame container: write/load round trip is exact") {
  testsup::TempDir dir("raster");
  Rng rng(555);
  for (int i = 0; i < 25; ++i) {
    const RasterFrame frame = random_frame(rng, i % 3 == 0);
    const std::string base = dir.str("frame" + std::to_string(i));
    write_frame(frame, base);
    const RasterFrame loaded = load_frame(base);
    CHECK(loaded.frame_id == frame.frame_id);
    CHECK(loaded.satellite_id == frame.satellite_id);
    CHECK(loaded.acquired_at_ms == frame.acquired_at_ms);
    CHECK(loaded.width == frame.width);
    CHECK(loaded.height == frame.height);
    CHECK(loaded.channels == frame.channels);
    CHECK(loaded.pixel_size_m == frame.pixel_size_m);
    CHECK(loaded.georef == frame.georef);
    if (frame.georef == GeoRef::Affine) CHECK(loaded.affine == frame.affine);
    REQUIRE(planes_identical(loaded, frame));
  }
}

TEST_CASE("frame container: truncated plane file fails with size mismatch") {
  testsup::TempDir dir("raster");
  const RasterFrame frame = testsup::flat_frame(8, 6, 1.0f);
  const std::string base = dir.str("trunc");
  write_frame(frame, base);
  fs::resize_file(base + ".planes", fs::file_size(base + ".planes") - 1);
  CHECK_THROWS_WITH_AS(load_frame(base), doctest::Contains("size mismatch"), FormatError);
}

TEST_CASE("frame container: plane count must match channel list") {
  testsup::TempDir dir("raster");
  const RasterFrame frame = testsup::flat_frame(8, 6, 1.0f);
  const std::string base = dir.str("chan");
  write_frame(frame, base);
  // Keep 3 of the 4 declared planes.
  fs::resize_file(base + ".planes", static_cast<uintmax_t>(8) * 6 * 4 * 3);
  CHECK_THROWS_AS(load_frame(base), FormatError);
}

TEST_CASE("frame container: unknown header version is rejected") {
  testsup::TempDir dir("raster");
  const RasterFrame frame = testsup::flat_frame(4, 4, 0.0f);
  const std::string base = dir.str("ver");
  write_frame(frame, base);
  std::ifstream in(base + ".json");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto pos = text.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 12, "\"version\": 9");
  std::ofstream(base + ".json", std::ios::trunc) << text;
  CHECK_THROWS_WITH_AS(load_frame(base), doctest::Contains("version"), FormatError);
}

TEST_CASE("frame container: radiance channel is mandatory") {
  RasterFrame frame = testsup::flat_frame(4, 4, 0.0f);
  frame.channels[0] = "brightness";
  CHECK_THROWS_WITH_AS(validate_frame(frame), doctest::Contains("radiance"), FormatError);
}

TEST_CASE("pixel_to_geo: affine sign convention") {
  RasterFrame frame = testsup::flat_frame(8, 8, 0.0f);
  frame.affine = {0.0, 1.0, 0.0, 0.0, 0.0, -1.0};  // origin (0,0), 1 degree per pixel
  const GeoPoint g = pixel_to_geo(frame, 2, 3);
  CHECK(g.lon_deg == doctest::Approx(3.0));
  CHECK(g.lat_deg == doctest::Approx(-2.0));
}

TEST_CASE("pixel/geo round trip within 1e-6 px on affine frames") {
  Rng rng(808);
  for (int i = 0; i < 20; ++i) {
    const RasterFrame frame = random_frame(rng, false);
    for (int k = 0; k < 50; ++k) {
      const double row = rng.uniform(0, frame.height - 1);
      const double col = rng.uniform(0, frame.width - 1);
      const GeoPoint g = pixel_to_geo(frame, row, col);
      const auto [r2, c2] = geo_to_pixel(frame, g);
      CHECK(std::abs(r2 - row) < 1e-6);
      CHECK(std::abs(c2 - col) < 1e-6);
    }
  }
}

TEST_CASE("pixel_to_geo: grid frames return the stored grid value exactly") {
  Rng rng(4141);
  const RasterFrame frame = random_frame(rng, true);
  for (int r = 0; r < frame.height; ++r) {
    for (int c = 0; c < frame.width; ++c) {
      const GeoPoint g = pixel_to_geo(frame, r, c);
      const size_t i = static_cast<size_t>(r) * frame.width + c;
      CHECK(g.lat_deg == static_cast<double>(frame.lat_grid[i]));
      CHECK(g.lon_deg == static_cast<double>(frame.lon_grid[i]));
    }
  }
  // geo_to_pixel finds the nearest pixel for an on-grid query.
  const auto [r, c] = geo_to_pixel(frame, pixel_to_geo(frame, 2, 3));
  CHECK(r == 2);
  CHECK(c == 3);
}

TEST_CASE("geo_to_pixel: outside footprint raises") {
  RasterFrame frame = testsup::flat_frame(8, 8, 0.0f);
  CHECK_THROWS_AS(geo_to_pixel(frame, make_geo_point(33.0, -140.0)), Error);  // ~10 deg east
  CHECK_THROWS_AS(geo_to_pixel(frame, make_geo_point(20.0, -150.0)), Error);
}

TEST_CASE("extract_crop: interior, corner, and single-pixel") {
  RasterFrame frame = testsup::flat_frame(16, 16, 0.0f);
  auto& rad = frame.planes[0];
  for (size_t i = 0; i < rad.size(); ++i) rad[i] = static_cast<float>(i);

  const Crop interior = extract_crop(frame, 8, 8, 5, -1.0f);
  CHECK(interior.size == 5);
  CHECK(interior.at(0, 2, 2) == frame.at(0, 8, 8));
  int fill_count = 0;
  for (float v : interior.planes[0])
    if (v == -1.0f) ++fill_count;
  CHECK(fill_count == 0);

  const Crop corner = extract_crop(frame, 0, 0, 3, -1.0f);
  CHECK(corner.at(0, 1, 1) == frame.at(0, 0, 0));
  fill_count = 0;
  for (float v : corner.planes[0])
    if (v == -1.0f) ++fill_count;
  CHECK(fill_count == 5);  // top row + left column of the 3x3 window

  const Crop single = extract_crop(frame, 5, 7, 1);
  CHECK(single.planes[0].size() == 1);
  CHECK(single.at(0, 0, 0) == frame.at(0, 5, 7));

  CHECK_THROWS_AS(extract_crop(frame, 8, 8, 4), ConfigError);
  CHECK_THROWS_AS(extract_crop(frame, 8, 8, 0), ConfigError);
}

TEST_CASE("extract_crop: fill count is analytic for any center") {
  RasterFrame frame = testsup::flat_frame(12, 9, 7.0f);
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const int size = 1 + 2 * static_cast<int>(rng.next_below(4));
    const int half = size / 2;
    const int row = static_cast<int>(rng.next_below(static_cast<uint64_t>(frame.height)));
    const int col = static_cast<int>(rng.next_below(static_cast<uint64_t>(frame.width)));
    const Crop crop = extract_crop(frame, row, col, size, -5.0f);
    const int rows_in = std::min(frame.height - 1, row + half) - std::max(0, row - half) + 1;
    const int cols_in = std::min(frame.width - 1, col + half) - std::max(0, col - half) + 1;
    const int expected_fill = size * size - rows_in * cols_in;
    int fill_count = 0;
    for (float v : crop.planes[0])
      if (v == -5.0f) ++fill_count;
    CHECK(fill_count == expected_fill);
  }
}
