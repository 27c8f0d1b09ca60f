#pragma once
// 8-bit RGB rasters with PPM (P6) and PNG writers, and the fixed color
// legend for dynamical-plane classification images.

#include <cstdint>
#include <string>
#include <vector>

namespace pinch {

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Raster() = default;
  Raster(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 0) {}

  void set(int col, int row, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    size_t k = (static_cast<size_t>(row) * width + col) * 3;
    rgb[k] = r;
    rgb[k + 1] = g;
    rgb[k + 2] = b;
  }
};

void write_ppm(const std::string& path, const Raster& img);
void write_png(const std::string& path, const Raster& img);

// Pixel labels produced by the renderer. Values are stable: they are the
// byte stored in class dumps and the index into the legend below.
enum class PixelLabel : std::uint8_t {
  escape = 0,
  attracted = 1,
  baker_candidate = 2,
  unresolved = 3,
};

// Legend (documented in the README):
//   escape          -> white
//   attracted       -> orange family, one shade per cycle id
//   baker-candidate -> blue
//   unresolved      -> black
void legend_color(PixelLabel label, int cycle_id, std::uint8_t out[3]);

}  // namespace pinch
