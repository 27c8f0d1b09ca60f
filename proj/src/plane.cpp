#include "pinch/plane.hpp"

namespace pinch {

double chordal_distance(cplx a, cplx b) {
  // 2|a-b| / sqrt((1+|a|^2)(1+|b|^2)), guarded against overflow for
  // astronomically large iterates by switching to the infinity limit.
  double na = std::norm(a), nb = std::norm(b);
  if (!std::isfinite(na) || na > 1e300) return chordal_distance(SpherePoint::infinity(), SpherePoint::finite(b));
  if (!std::isfinite(nb) || nb > 1e300) return chordal_distance(SpherePoint::finite(a), SpherePoint::infinity());
  return 2.0 * std::abs(a - b) / std::sqrt((1.0 + na) * (1.0 + nb));
}

double chordal_distance(const SpherePoint& a, const SpherePoint& b) {
  if (a.inf && b.inf) return 0.0;
  if (a.inf) return 2.0 / std::sqrt(1.0 + std::norm(b.z));
  if (b.inf) return 2.0 / std::sqrt(1.0 + std::norm(a.z));
  return chordal_distance(a.z, b.z);
}

double spherical_diameter(const std::vector<SpherePoint>& pts) {
  double d = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      d = std::max(d, chordal_distance(pts[i], pts[j]));
  return d;
}

double spherical_diameter(const std::vector<cplx>& pts) {
  double d = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      d = std::max(d, chordal_distance(pts[i], pts[j]));
  return d;
}

cplx pixel_to_point(const Window& w, int col, int row) {
  double x = w.left() + (col + 0.5) * w.pitch_x();
  double y = w.top() - (row + 0.5) * w.pitch_y();
  return {x, y};
}

std::optional<std::pair<int, int>> point_to_pixel(const Window& w, cplx p) {
  if (!w.contains(p)) return std::nullopt;
  int col = static_cast<int>((p.real() - w.left()) / w.pitch_x());
  int row = static_cast<int>((w.top() - p.imag()) / w.pitch_y());
  col = std::min(std::max(col, 0), w.cols - 1);
  row = std::min(std::max(row, 0), w.rows - 1);
  return std::make_pair(col, row);
}

double Polyline::spherical_diam() const {
  std::vector<SpherePoint> sp;
  sp.reserve(pts.size() + 1);
  for (cplx p : pts) sp.push_back(SpherePoint::finite(p));
  if (reaches_infinity) sp.push_back(SpherePoint::infinity());
  return spherical_diameter(sp);
}

}  // namespace pinch
