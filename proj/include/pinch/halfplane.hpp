#pragma once
// Hyperbolic geometry of the upper half plane: complete geodesics, the
// PSL(2,R) isometries that move the standard vertical geodesic onto them, and
// sector neighborhoods of fixed hyperbolic thickness.

#include <Eigen/Dense>
#include <utility>

#include "pinch/plane.hpp"

namespace pinch {

struct HalfPlaneGeodesic {
  bool vertical = false;
  double x0 = 0.0;  // vertical form: {Re = x0}, endpoints x0 and infinity
  double c = 0.0;   // semicircle center on R
  double r = 1.0;   // semicircle radius

  static HalfPlaneGeodesic vertical_line(double x);
  static HalfPlaneGeodesic semicircle(double center, double radius);

  // Oriented boundary endpoints; first() -> second() is the direction that
  // isometry_to sends 0 -> infinity along.
  SpherePoint first_endpoint() const;
  SpherePoint second_endpoint() const;
  bool on_geodesic(cplx z, double tol = 1e-10) const;
  cplx sample(double t) const;  // t in (0,1), endpoint-avoiding parametrization
};

// Unique geodesic with the given distinct boundary endpoints, or through two
// distinct interior points of H.
HalfPlaneGeodesic geodesic_between(SpherePoint u, SpherePoint v);
HalfPlaneGeodesic geodesic_through(cplx z, cplx w);

class Isometry {
 public:
  Isometry();  // identity
  explicit Isometry(const Eigen::Matrix2d& m);  // normalized to det 1, requires det > 0

  cplx operator()(cplx z) const;
  SpherePoint boundary(SpherePoint x) const;  // action on R plus infinity
  Isometry inverse() const;
  Isometry compose(const Isometry& rhs) const;  // this after rhs
  const Eigen::Matrix2d& matrix() const { return m_; }

 private:
  Eigen::Matrix2d m_;
};

double hyperbolic_distance(cplx z, cplx w);

// The oriented isometry taking the standard geodesic (vertical at 0) onto g,
// with i landing on g. Vertical targets give horizontal translations.
Isometry isometry_to(const HalfPlaneGeodesic& g);

// Sector of hyperbolic thickness delta about a geodesic, transported from
// {|arg z - pi/2| < delta} by isometry_to.
class GoodNeighborhood {
 public:
  GoodNeighborhood(const HalfPlaneGeodesic& g, double delta);

  bool contains(cplx z) const;
  double delta() const { return delta_; }
  const Isometry& chart() const { return chart_; }
  // The two boundary curves, sampled between hyperbolic heights exp(s_min)
  // and exp(s_max) along the core.
  std::pair<Polyline, Polyline> boundary_curves(double s_min, double s_max,
                                                int samples) const;

 private:
  Isometry chart_;      // standard sector -> this neighborhood
  Isometry inv_chart_;
  double delta_;
};

}  // namespace pinch
