#include "pinch/halfplane.hpp"

#include <cmath>
#include <stdexcept>

namespace pinch {

HalfPlaneGeodesic HalfPlaneGeodesic::vertical_line(double x) {
  HalfPlaneGeodesic g;
  g.vertical = true;
  g.x0 = x;
  return g;
}

HalfPlaneGeodesic HalfPlaneGeodesic::semicircle(double center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("semicircle needs radius > 0");
  HalfPlaneGeodesic g;
  g.vertical = false;
  g.c = center;
  g.r = radius;
  return g;
}

SpherePoint HalfPlaneGeodesic::first_endpoint() const {
  if (vertical) return SpherePoint::finite(cplx(x0, 0.0));
  return SpherePoint::finite(cplx(c - r, 0.0));
}

SpherePoint HalfPlaneGeodesic::second_endpoint() const {
  if (vertical) return SpherePoint::infinity();
  return SpherePoint::finite(cplx(c + r, 0.0));
}

bool HalfPlaneGeodesic::on_geodesic(cplx z, double tol) const {
  if (z.imag() <= 0.0) return false;
  if (vertical) return std::abs(z.real() - x0) < tol;
  return std::abs(std::abs(z - cplx(c, 0.0)) - r) < tol;
}

cplx HalfPlaneGeodesic::sample(double t) const {
  if (vertical) {
    // heights exp(tan-warped t) cover (0, inf) symmetrically around 1
    double s = std::tan(kPi * (t - 0.5));
    return cplx(x0, std::exp(s));
  }
  double th = kPi * (1.0 - t);
  return cplx(c + r * std::cos(th), r * std::sin(th));
}

HalfPlaneGeodesic geodesic_between(SpherePoint u, SpherePoint v) {
  if (u == v) throw std::invalid_argument("geodesic endpoints coincide");
  if (u.inf && v.inf) throw std::invalid_argument("geodesic endpoints coincide");
  if (u.inf) return HalfPlaneGeodesic::vertical_line(v.z.real());
  if (v.inf) return HalfPlaneGeodesic::vertical_line(u.z.real());
  double a = u.z.real(), b = v.z.real();
  if (a == b) throw std::invalid_argument("geodesic endpoints coincide");
  return HalfPlaneGeodesic::semicircle(0.5 * (a + b), 0.5 * std::abs(b - a));
}

HalfPlaneGeodesic geodesic_through(cplx z, cplx w) {
  if (!(z.imag() > 0.0) || !(w.imag() > 0.0))
    throw std::invalid_argument("interior geodesic needs points in H");
  if (std::abs(z - w) < 1e-300) throw std::invalid_argument("points coincide");
  double dx = z.real() - w.real();
  if (std::abs(dx) < 1e-14 * (1.0 + std::abs(z) + std::abs(w)))
    return HalfPlaneGeodesic::vertical_line(0.5 * (z.real() + w.real()));
  double c = (std::norm(z) - std::norm(w)) / (2.0 * dx);
  return HalfPlaneGeodesic::semicircle(c, std::abs(z - cplx(c, 0.0)));
}

Isometry::Isometry() { m_.setIdentity(); }

Isometry::Isometry(const Eigen::Matrix2d& m) : m_(m) {
  double det = m_.determinant();
  if (!(det > 0.0)) throw std::invalid_argument("isometry needs det > 0");
  m_ /= std::sqrt(det);
}

cplx Isometry::operator()(cplx z) const {
  cplx num = m_(0, 0) * z + m_(0, 1);
  cplx den = m_(1, 0) * z + m_(1, 1);
  return num / den;
}

SpherePoint Isometry::boundary(SpherePoint x) const {
  if (x.inf) {
    if (std::abs(m_(1, 0)) < 1e-300) return SpherePoint::infinity();
    return SpherePoint::finite(cplx(m_(0, 0) / m_(1, 0), 0.0));
  }
  double t = x.z.real();
  double den = m_(1, 0) * t + m_(1, 1);
  if (std::abs(den) < 1e-300) return SpherePoint::infinity();
  return SpherePoint::finite(cplx((m_(0, 0) * t + m_(0, 1)) / den, 0.0));
}

Isometry Isometry::inverse() const {
  Eigen::Matrix2d inv;
  inv << m_(1, 1), -m_(0, 1), -m_(1, 0), m_(0, 0);
  Isometry out;
  out.m_ = inv;  // det already 1
  return out;
}

Isometry Isometry::compose(const Isometry& rhs) const {
  Isometry out;
  out.m_ = m_ * rhs.m_;
  return out;
}

double hyperbolic_distance(cplx z, cplx w) {
  double iy = z.imag(), iw = w.imag();
  if (!(iy > 0.0) || !(iw > 0.0))
    throw std::invalid_argument("hyperbolic distance needs points in H");
  double q = std::norm(z - w) / (2.0 * iy * iw);
  return std::acosh(1.0 + q);
}

Isometry isometry_to(const HalfPlaneGeodesic& g) {
  Eigen::Matrix2d m;
  if (g.vertical) {
    m << 1.0, g.x0, 0.0, 1.0;
    return Isometry(m);
  }
  // 0 -> c - r, infinity -> c + r; i lands on the apex c + ir.
  m << g.c + g.r, g.c - g.r, 1.0, 1.0;
  return Isometry(m);
}

GoodNeighborhood::GoodNeighborhood(const HalfPlaneGeodesic& g, double delta)
    : chart_(isometry_to(g)), inv_chart_(chart_.inverse()), delta_(delta) {
  if (!(delta > 0.0 && delta < kPi / 2.0))
    throw std::invalid_argument("thickness must lie in (0, pi/2)");
}

bool GoodNeighborhood::contains(cplx z) const {
  if (!(z.imag() > 0.0)) return false;
  cplx w = inv_chart_(z);
  if (!(w.imag() > 0.0)) return false;
  return std::abs(std::arg(w) - kPi / 2.0) < delta_;
}

std::pair<Polyline, Polyline> GoodNeighborhood::boundary_curves(
    double s_min, double s_max, int samples) const {
  Polyline lo, hi;
  lo.pts.reserve(samples);
  hi.pts.reserve(samples);
  for (int j = 0; j < samples; ++j) {
    double s = s_min + (s_max - s_min) * j / (samples - 1.0);
    double rad = std::exp(s);
    lo.pts.push_back(chart_(rad * std::polar(1.0, kPi / 2.0 - delta_)));
    hi.pts.push_back(chart_(rad * std::polar(1.0, kPi / 2.0 + delta_)));
  }
  return {lo, hi};
}

}  // namespace pinch
