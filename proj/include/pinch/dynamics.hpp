#pragma once
// Forward iteration, fixed-point location, dynamical-plane rendering, inverse
// branches along orbits, and the invariant-domain classifiers built on them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinch/expr.hpp"
#include "pinch/plane.hpp"
#include "pinch/raster.hpp"

namespace pinch {

struct Orbit {
  std::vector<cplx> pts;   // z0, f(z0), ... ; last entry is the first value past the exit test, if any
  bool saturated = false;  // an exp/sin/cos argument left the representable range
  bool escaped = false;    // |z| exceeded the escape radius
};

Orbit iterate_orbit(const EntireMap& f, cplx z0, int steps,
                    double escape_radius = 1e10);

enum class StabilityClass : std::uint8_t {
  superattracting,
  attracting,
  repelling,
  parabolic_like,
};

const char* stability_name(StabilityClass c);

struct FixedPoint {
  cplx location;
  cplx multiplier;
  StabilityClass cls;
  double residual;  // |f(z) - z| at the reported location
};

// Newton on f(z) - z from a uniform seed grid over the window. Roots outside
// the window are discarded; survivors are merged within merge_tol and sorted
// by (Re, Im).
std::vector<FixedPoint> find_fixed_points(const EntireMap& f, const Window& w,
                                          int seed_grid = 48,
                                          int newton_iters = 60,
                                          double merge_tol = 1e-7);

void write_fixed_points_csv(const std::string& path, const std::string& map_name,
                            const std::vector<FixedPoint>& fps);

struct RenderConfig {
  Window window;
  int budget = 500;
  double escape_radius = 1e10;
  double close_return_tol = 1e-9;  // scaled by (1 + |z|)
  int max_period = 8;
  int threads = 1;
};

// Per-point outcome of the classification kernel. `datum` is the canonical
// cycle representative for attracted points (smallest (Re, Im) on the cycle)
// and the last computed iterate otherwise.
struct PointClass {
  PixelLabel label = PixelLabel::unresolved;
  int steps = 0;
  int period = 0;
  cplx datum{0.0, 0.0};
};

PointClass classify_point(const EntireMap& f, cplx z0, const RenderConfig& cfg);

struct RenderResult {
  Window window;
  std::vector<PixelLabel> label;      // rows*cols, row-major from the top
  std::vector<std::int16_t> cycle;    // registry index for attracted pixels, else -1
  std::vector<std::int16_t> steps;    // iterations spent, capped at budget
  std::vector<cplx> cycle_reps;       // registry of cycle representatives
  std::vector<int> cycle_periods;

  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * window.cols + col;
  }
  Raster to_raster() const;
  double label_fraction(PixelLabel l) const;
};

// Pixels are classified independently (rows in parallel); the cycle registry
// is built afterwards by a sequential row-major pass, so ids are stable under
// any thread count.
RenderResult render_dynamical_plane(const EntireMap& f, const RenderConfig& cfg);

struct InverseOptions {
  int newton_iters = 60;
  double tol = 1e-11;       // residual threshold, scaled by (1 + |target|)
  int translate_range = 0;  // also seed at seed + 2*pi*i*k, |k| <= range
  double dedup_tol = 1e-8;
};

// Newton on f(w) - target from the given seeds. Returns the distinct
// converged preimages inside no particular region, sorted by (Re, Im).
std::vector<cplx> inverse_images(const EntireMap& f, cplx target,
                                 const std::vector<cplx>& seeds,
                                 const InverseOptions& opt = {});

enum class BakerType : std::uint8_t {
  hyperbolic_I,   // a > 1, backward orbit in the domain converges to a finite point
  hyperbolic_II,  // a > 1, backward orbit drifts to infinity
  parabolic,      // a ~ 1
  not_baker,      // forward orbit does not tend to infinity
  inconclusive,
};

const char* baker_type_name(BakerType t);

struct BakerOptions {
  int forward_steps = 400;
  double precision_radius = 1e8;  // stop averaging once |z| makes differences noisy
  double a_tol = 0.05;
  // Growth of max|z| between the middle and tail quarters of the orbit that
  // still counts as escape; catches log-slow drifts the radius test misses.
  double trend_margin = 0.3;
  int backward_steps = 60;
  double backward_converge_tol = 1e-9;
  double drift_factor = 1.5;
};

struct BakerClassification {
  BakerType type = BakerType::inconclusive;
  double a_estimate = 0.0;   // tail average of |z_{k+1}-z_k| / |z_k-z_{k-1}|
  SpherePoint zeta = SpherePoint::infinity();  // finite for hyperbolic_I
  int ratios_used = 0;
  int backward_steps_taken = 0;
};

// Classifies the invariant domain seen from `probe`: estimates the step
// multiplier a along the forward orbit, then (for a > 1) follows the backward
// orbit by nearest-branch Newton to decide whether it converges in the plane
// or leaves every bounded set.
BakerClassification baker_detect_classify(const EntireMap& f, cplx probe,
                                          const BakerOptions& opt = {});

struct PostsingularSample {
  std::vector<cplx> pts;
  std::vector<int> depth;  // orbit index of each point, 0 = the singular value itself
};

// Forward orbits of the catalogued singular values, truncated at depth_cap or
// when they leave |z| <= bound.
PostsingularSample postsingular_sample(const EntireMap& f, int depth_cap,
                                       double bound = 1e6);

struct SemiHypReport {
  double min_distance = 0.0;  // Euclidean, Julia samples to postsingular sample
  bool distance_pass = false;
  int pullback_critical_hits = 0;  // critical points landing inside pulled-back probe clouds
  bool pass = false;
};

SemiHypReport semihyperbolic_probe(const EntireMap& f,
                                   const std::vector<cplx>& julia_samples,
                                   const PostsingularSample& ps, int depth,
                                   double probe_radius = 0.3,
                                   double distance_threshold = 0.05);

struct ThinReport {
  struct Disc {
    cplx center;
    double radius;
    double julia_density;
  };
  std::vector<Disc> discs;
  double epsilon = 0.1;
  bool pass = false;  // every sampled disc has julia_density < 1 - epsilon
};

// Density audit on a rendered plane: pixels labelled escape or unresolved are
// counted as the Julia proxy in discs of radius R placed on a coarse grid.
ThinReport thin_at_infinity_probe(const RenderResult& rr, double R, double eps = 0.1);

}  // namespace pinch
