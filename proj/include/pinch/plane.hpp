#pragma once
// Riemann-sphere primitives shared by every module: the chordal metric,
// rectangular windows with pixel addressing, and sampled curves.

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pinch {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

// A point of C together with the point at infinity.
struct SpherePoint {
  cplx z{0.0, 0.0};
  bool inf = false;

  static SpherePoint infinity() { return SpherePoint{cplx{0.0, 0.0}, true}; }
  static SpherePoint finite(cplx w) { return SpherePoint{w, false}; }

  bool operator==(const SpherePoint& o) const {
    if (inf != o.inf) return false;
    return inf || z == o.z;
  }
};

// Chordal metric, normalized so antipodal points are at distance 2.
double chordal_distance(const SpherePoint& a, const SpherePoint& b);
double chordal_distance(cplx a, cplx b);

// Max pairwise chordal distance over a point set.
double spherical_diameter(const std::vector<SpherePoint>& pts);
double spherical_diameter(const std::vector<cplx>& pts);

// Axis-aligned view rectangle with a raster resolution attached.
// Pixel (col 0, row 0) is the top-left corner; rows increase downward.
struct Window {
  cplx center{0.0, 0.0};
  double half_width = 1.0;
  double half_height = 1.0;
  int cols = 512;
  int rows = 512;

  double left() const { return center.real() - half_width; }
  double right() const { return center.real() + half_width; }
  double bottom() const { return center.imag() - half_height; }
  double top() const { return center.imag() + half_height; }
  double pitch_x() const { return 2.0 * half_width / cols; }
  double pitch_y() const { return 2.0 * half_height / rows; }

  bool contains(cplx p) const {
    return p.real() >= left() && p.real() <= right() && p.imag() >= bottom() &&
           p.imag() <= top();
  }
  // True when p stays inside after shrinking the window by `margin`
  // (fraction of the half extents).
  bool contains_with_margin(cplx p, double margin) const {
    return std::abs(p.real() - center.real()) <= half_width * (1.0 - margin) &&
           std::abs(p.imag() - center.imag()) <= half_height * (1.0 - margin);
  }
};

// Center of the given pixel.
cplx pixel_to_point(const Window& w, int col, int row);
// Pixel containing the point; nullopt outside the window.
std::optional<std::pair<int, int>> point_to_pixel(const Window& w, cplx p);

// Sampled curve on the sphere. Endpoints may be the infinity marker
// (curves truncated at a window edge keep a finite last vertex and set
// `reaches_infinity` instead).
struct Polyline {
  std::vector<cplx> pts;
  bool closed = false;
  bool reaches_infinity = false;

  double spherical_diam() const;
};

}  // namespace pinch
