#include "pinch/raster.hpp"

#include <png.h>

#include <cstdio>
#include <stdexcept>

namespace pinch {

void write_ppm(const std::string& path, const Raster& img) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "P6\n%d %d\n255\n", img.width, img.height);
  std::fwrite(img.rgb.data(), 1, img.rgb.size(), f);
  std::fclose(f);
}

void write_png(const std::string& path, const Raster& img) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw std::runtime_error("png write failed: " + path);
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // Strip timestamps and ancillary chunks so identical pixels give identical bytes.
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r)
    rows[r] = const_cast<png_bytep>(img.rgb.data() + static_cast<size_t>(r) * img.width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void legend_color(PixelLabel label, int cycle_id, std::uint8_t out[3]) {
  switch (label) {
    case PixelLabel::escape:
      out[0] = 255; out[1] = 255; out[2] = 255;
      return;
    case PixelLabel::attracted: {
      // One orange-family shade per cycle, wrapping after 8.
      static const std::uint8_t shades[8][3] = {
          {230, 120, 20}, {200, 90, 10},  {250, 160, 60}, {180, 70, 30},
          {240, 140, 90}, {160, 90, 20},  {250, 190, 120}, {140, 60, 10}};
      int k = cycle_id < 0 ? 0 : cycle_id % 8;
      out[0] = shades[k][0]; out[1] = shades[k][1]; out[2] = shades[k][2];
      return;
    }
    case PixelLabel::baker_candidate:
      out[0] = 40; out[1] = 90; out[2] = 200;
      return;
    case PixelLabel::unresolved:
      out[0] = 0; out[1] = 0; out[2] = 0;
      return;
  }
  out[0] = out[1] = out[2] = 0;
}

}  // namespace pinch
