#pragma once
// Koenigs linearizing charts for invariant domains with an affine asymptotic
// model, and the geodesic laminations they transport: fundamental leaves,
// grand-orbit pullbacks, and the structural validation report.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pinch/dynamics.hpp"
#include "pinch/expr.hpp"
#include "pinch/halfplane.hpp"
#include "pinch/plane.hpp"

namespace pinch {

// Chart w = phi(z) = a^{-n}(f^n(z) - p*) conjugating f to w -> a*w near the
// invariant domain's asymptotic model. The upper half plane enters through
// w_H = -i * phi, so the interior maps to Im > 0 and the core ray to i*R+.
struct KoenigsChart {
  EntireMap map;
  cplx p_star{0.0, 0.0};
  double a = 2.0;
  int n_K = 25;

  cplx forward(cplx z, bool& ok) const;
  cplx forward_deriv(cplx z, bool& ok) const;  // chain product of f' along the orbit
  std::optional<cplx> inverse(cplx zeta, cplx seed, int iters = 60,
                              double tol = 1e-9) const;
  cplx to_halfplane(cplx z, bool& ok) const;
  std::optional<cplx> from_halfplane(cplx w, cplx seed, int iters = 60,
                                     double tol = 1e-9) const;
  double conjugacy_residual(cplx probe) const;  // |phi(f(z)) - a*phi(z)| / (1+|phi(z)|)
};

// Validates the conjugacy residual on the probe points (default: three points
// displaced left of p*) and throws if the chart does not linearize there.
KoenigsChart build_koenigs(const EntireMap& f, cplx p_star, double a, int n_K,
                           std::vector<cplx> probes = {}, double tol = 1e-6);

struct Leaf {
  std::vector<cplx> pts;   // ordered polyline sample, endpoint-to-endpoint
  SpherePoint end_a = SpherePoint::infinity();
  SpherePoint end_b = SpherePoint::infinity();
  int depth = 0;
  int parent = -1;  // index into the owning grand orbit, -1 for depth 0
  int branch = 0;
  bool to_infinity = false;  // an ideal endpoint, the lambda_{a,inf} kind
  bool truncated = false;    // clipped at the expansion window
  double diam_spherical = 0.0;
  double diam_euclid = 0.0;

  void compute_diams();
};

struct Lamination {
  std::vector<Leaf> leaves;
  double thickness = kPi / 6.0;
};

struct LaminationBuildOptions {
  int samples_per_leaf = 129;
  double endpoint_margin = 0.04;  // parameter margin away from the ideal endpoints
  double newton_tol = 1e-9;
  double thickness = kPi / 6.0;
};

// Depth-0 leaves: half-plane geodesics joining the chart coordinates of the
// anchor pairs, mapped back through the chart inverse with continuation
// seeding from the apex outward. Throws if two leaves touch at sample
// resolution.
Lamination build_fundamental_lamination(
    const KoenigsChart& chart,
    const std::vector<std::pair<SpherePoint, SpherePoint>>& anchors,
    const LaminationBuildOptions& opt = {});

struct GrandOrbitOptions {
  int K_max = 3;
  int translate_range = 3;     // 2*pi*i*k seed offsets at the first vertex
  double continuity_tol = 1.0;  // larger jumps between consecutive preimages drop the leaf
  int max_leaves = 4000;
  Window window;
  int threads = 1;
};

struct GrandOrbit {
  std::vector<Leaf> leaves;  // depth-0 block first, then depth by depth
  int K_max = 0;
  int dropped = 0;
  std::vector<double> max_diam_by_depth;  // spherical, index = depth
};

GrandOrbit grand_orbit_expand(const EntireMap& f, const Lamination& lam,
                              const GrandOrbitOptions& opt);

struct LaminationReport {
  double min_leaf_gap = 0.0;    // depth-0 pairwise closest vertex distance
  double min_hausdorff = 0.0;   // depth-0 pairwise symmetric Hausdorff distance
  bool accumulation = false;
  int lambda_inf_count = 0;
  bool closed_curve = false;
  bool property_p = false;      // no closed curve and no ideal-endpoint leaf
  int truncated_leaves = 0;
  int dropped_leaves = 0;
};

LaminationReport validate_lamination(const GrandOrbit& go, double min_gap = 1e-3,
                                     double endpoint_merge_tol = 1e-4);

void write_lamination_json(const std::string& path, const GrandOrbit& go);
GrandOrbit read_lamination_json(const std::string& path);

}  // namespace pinch
