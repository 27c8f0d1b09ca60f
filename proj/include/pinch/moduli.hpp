#pragma once
// Conformal modulus and discrete extremal length on grids, with the
// inequality audits (separation bound, superadditivity, distance-modulus,
// equicontinuity) used as convergence diagnostics. Extremal length follows
// the classical density-ascent scheme: any non-negative density gives a
// certified lower bound L(rho)^2 / A(rho); iteration improves it.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "pinch/plane.hpp"

namespace pinch {

struct AnnulusSpec {
  bool round = true;
  cplx center{0.0, 0.0};
  double r = 1.0;
  double R = 2.0;
  Polyline outer;  // polygonal form: closed boundary curves, inner inside outer
  Polyline inner;

  static AnnulusSpec round_spec(cplx center, double r, double R);
  static AnnulusSpec polygonal(Polyline outer, Polyline inner);
};

struct QuadrilateralSpec {
  Polyline boundary;            // closed, positively oriented
  std::array<int, 4> marks{};   // vertex indices, strictly increasing
};

struct GridMetric {
  Window window;
  Eigen::ArrayXXd rho;  // rows x cols, non-negative
};

// log(R/r) / (2 pi); throws on a polygonal spec.
double round_annulus_modulus(const AnnulusSpec& a);

struct ExtremalLengthOptions {
  int resolution = 128;  // cells across the bounding box width
  int iterations = 50;
};

// Extremal length of an explicit curve set against densities on the window
// grid. Lower bound, deterministic.
double extremal_length_grid(const std::vector<Polyline>& curves,
                            const Window& window,
                            const ExtremalLengthOptions& opt = {});

enum class FamilyKind { joining, separating };

// Lattice-path families of an annulus: joining connects the two boundary
// contours (this equals the modulus), separating runs around the hole via a
// radial cut. Product of the two is close to 1 on round annuli.
double annulus_extremal_length(const AnnulusSpec& a, FamilyKind kind,
                               const ExtremalLengthOptions& opt = {});

// Modulus of an annulus: exact formula when round, joining-family extremal
// length when polygonal. Returns 0 when the region degenerates at grid
// resolution (terminals unreachable).
double annulus_modulus(const AnnulusSpec& a, const ExtremalLengthOptions& opt = {});

// Extremal length of curves joining side [marks0->marks1] to side
// [marks2->marks3]; a/b for an a x b rectangle marked in order.
double quadrilateral_module(const QuadrilateralSpec& q,
                            const ExtremalLengthOptions& opt = {});

struct ModuliCheckRow {
  std::string check;
  std::string params;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = false;
};

void write_moduli_csv(const std::string& path,
                      const std::vector<ModuliCheckRow>& rows);

// Ring domain separating (a1, b1) from (a2, b2): modulus against the
// chordal-distance bound pi^2 / (2 alpha^2).
ModuliCheckRow separation_bound_check(const AnnulusSpec& B, cplx a1, cplx b1,
                                      SpherePoint a2, SpherePoint b2,
                                      const ExtremalLengthOptions& opt = {});

// Sum of moduli of disjoint essential sub-annuli against the modulus of the
// ambient annulus. Slack covers discretization of polygonal parts only.
ModuliCheckRow superadditivity_check(const AnnulusSpec& A,
                                     const std::vector<AnnulusSpec>& parts,
                                     double slack = 0.05,
                                     const ExtremalLengthOptions& opt = {});

// |z - w| versus |w| exp(-2 pi / EL) for curves separating {0, inf} from
// {z, w}. The grid estimate is reported on both sides, not asserted.
ModuliCheckRow distance_modulus_bound(cplx z, cplx w,
                                      const ExtremalLengthOptions& opt = {});

struct EquicontinuityReport {
  std::vector<double> moduli;  // per annulus, image under h
  double bound = 0.0;
  bool pass = false;
};

// Images of nested round annuli under h, each measured by polygonal modulus;
// PASS when every image modulus stays at or above the bound.
EquicontinuityReport equicontinuity_probe(
    const std::function<cplx(cplx)>& h, const std::vector<AnnulusSpec>& annuli,
    double bound, int boundary_samples = 256,
    const ExtremalLengthOptions& opt = {});

// Even-odd test against a closed polyline.
bool point_in_polygon(const Polyline& poly, cplx p);

}  // namespace pinch
