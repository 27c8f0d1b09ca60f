#pragma once
// Integration of a compactly supported Beltrami coefficient into a normalized
// quasiconformal map: spectral Beurling/Cauchy transforms on the periodic
// grid, Neumann iteration g = mu + mu*B(g), then h = z + C(g) followed by the
// affine normalization fixing two marked points (and infinity).

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pinch/expr.hpp"
#include "pinch/lamination.hpp"
#include "pinch/pinchfield.hpp"
#include "pinch/plane.hpp"

namespace pinch {

struct SolverConfig {
  int resolution = 512;  // power of two, at least 256
  Window window;
  int max_iterations = 500;
  double tolerance = 1e-9;
  cplx p{0.0, 0.0};
  cplx q{1.0, 0.0};
};

struct QCMap {
  Window window;            // resolution x resolution, top-down pixel rows
  Eigen::ArrayXXcd h;       // normalized samples at pixel centers
  cplx affine_a{1.0, 0.0};  // rim model a*z + b, also the outside-window value
  cplx affine_b{0.0, 0.0};
  double residual = 0.0;
  int iterations = 0;
  double mu_sup = 0.0;
  cplx p{0.0, 0.0};
  cplx q{0.0, 0.0};

  cplx evaluate(cplx z) const;  // bilinear inside the window, affine outside
  cplx invert(cplx w, bool& ok) const;
  int negative_cells() const;  // image grid cells with reversed orientation
  double rim_affine_deviation() const;  // relative, over the outer 5% band
};

// Throws on support touching the 10% window margin, on |mu| >= 1, and on
// Neumann divergence (five consecutive residual increases). The input field
// is resampled to the solver grid by nearest pixel; aligned grids copy
// exactly.
QCMap solve_beltrami(const BeltramiField& field, const SolverConfig& cfg);

// h(f(h^{-1}(z))). ok goes false when the inversion fails or the chain
// leaves the window.
cplx conjugate_map(const EntireMap& f, const QCMap& h, cplx z, bool& ok);

// |mu| of the conjugated map estimated by central differences at scale
// `step`; small values certify discrete holomorphy of f_t at z.
double conjugacy_beltrami_estimate(const EntireMap& f, const QCMap& h, cplx z,
                                   double step, bool& ok);

struct ProbeDisc {
  cplx center{0.0, 0.0};
  double radius = 0.5;
  int samples = 64;
};

struct DiagRow {
  double t = 0.0;
  std::string kind;
  int index = 0;
  double value = 0.0;
};

struct DeformationFrame {
  double t = 0.0;
  const QCMap* map = nullptr;
  double field_max_abs = 0.0;
};

// Per frame: spherical diameter of each tracked leaf image (with and without
// ideal endpoints), probe-disc image diameter ratios, solver residual,
// input-field dilatation data.
std::vector<DiagRow> deformation_diagnostics(
    const std::vector<DeformationFrame>& frames, const GrandOrbit& go,
    const std::vector<int>& tracked_leaves, const std::vector<ProbeDisc>& probes);

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagRow>& rows);

void write_qcmap_dump(const std::string& path_base, const QCMap& map, double t);

}  // namespace pinch
