#pragma once
// The stretch family v_t, band map P_t(x+iy) = x + i v_t(y), strip-side maps
// S+-, the composed charts between the band and tube neighborhoods of leaves,
// and assembly of the deformation Beltrami field over a grand orbit.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinch/lamination.hpp"
#include "pinch/plane.hpp"

namespace pinch {

struct PinchProfile {
  double L_b = 1.0;
  double L_y = 2.0;
  double L_r = 3.0;
  double mu_max = 0.95;
  std::vector<double> t_grid;

  double tau(double t) const { return L_r + t / (1.0 - t); }
  double m(double t) const { return L_y + t * (L_r - L_y); }
  // Largest t whose band stretch keeps (1-dvdy)/(1+dvdy) within mu_max.
  double t_cap() const;
};

// Identity below m(t), quadratic bump above; v_t(L_r) = tau(t), C1 join.
double v_t(const PinchProfile& p, double t, double y);
double dv_dy(const PinchProfile& p, double t, double y);
cplx P_tilde(const PinchProfile& p, double t, cplx z);
// (1 - dv/dy) / (1 + dv/dy), real in (-1, 0], clamped to magnitude mu_max.
double mu_of_P(const PinchProfile& p, double t, double y);

cplx S_plus(const PinchProfile& p, double delta, cplx z);
cplx S_minus(const PinchProfile& p, double delta, cplx z);
cplx S_plus_inv(const PinchProfile& p, double delta, cplx zeta);
cplx S_minus_inv(const PinchProfile& p, double delta, cplx zeta);

// Beltrami coefficient of L1 composed with L2 (L2 applied first), where
// L2(z) = a2 z + b2 conj(z) and L1 has coefficient mu1.
cplx compose_linear_beltrami(cplx a2, cplx b2, cplx mu1);

// mu(h(u)) * conj(h'(u)) / h'(u); magnitude preserved. h'(u) = 0 is the
// caller's hypothesis violation and must be screened beforehand.
cplx pullback_beltrami_holomorphic(cplx mu_at_image, cplx dh);

enum class Side : std::uint8_t { plus = 1, minus = 2 };

// One side of the tube neighborhood of a leaf. phi: band -> domain needs the
// chart inverse (Newton); psi: domain -> band is fully forward-computable.
struct StripChart {
  Side side = Side::minus;
  double delta = kPi / 6.0;
  PinchProfile profile;
  KoenigsChart chart;
  Isometry M;      // standard geodesic -> this leaf's half-plane geodesic
  Isometry M_inv;
  int leaf_index = -1;

  std::optional<cplx> phi(cplx band_z) const;
  std::optional<cplx> psi(cplx u) const;
  // Light path reusing a precomputed chart value: w_h = -i*phi_chart(u),
  // dwh = -i*phi_chart'(u). Returns band coordinate and d(band)/du.
  std::optional<std::pair<cplx, cplx>> band_from_halfplane(cplx w_h, cplx dwh) const;
};

// A plus and a minus chart for every depth-0 leaf, reconstructed from the
// leaf endpoints through the chart boundary coordinates.
std::vector<StripChart> make_strip_charts(const KoenigsChart& chart,
                                          const std::vector<Leaf>& depth0_leaves,
                                          double delta,
                                          const PinchProfile& profile);

struct FieldOptions {
  Window window;
  int K_max = 4;
  double support_margin = 0.12;  // fraction of the half-extents kept clear
  double eps_sing = 1e-3;
  int threads = 1;
};

struct BeltramiField {
  Window window;
  Eigen::ArrayXXcd mu;                  // rows x cols, window pixel convention
  std::vector<std::int16_t> leaf_id;    // provenance, -1 where unsupported
  std::vector<std::int8_t> depth;
  std::vector<std::int8_t> side_tag;    // Side values, 0 where unsupported
  int overlap_count = 0;
  int sing_skips = 0;                   // orbit hit a vanishing derivative
  double max_abs = 0.0;
  double support_fraction = 0.0;

  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * window.cols + col;
  }
  double dilatation() const { return (1.0 + max_abs) / (1.0 - max_abs); }
};

// Spread of the band structure over the grand orbit: a pixel at depth k
// carries the depth-0 tube value at f^k(z) pulled back through (f^k)'.
// Smallest depth wins; simultaneous claims by distinct sources are counted
// as overlap errors. Throws if a leaf comes within eps_sing of a critical
// point of f.
BeltramiField assemble_sigma_t(const EntireMap& f, const GrandOrbit& go,
                               const std::vector<StripChart>& charts,
                               const PinchProfile& profile, double t,
                               const FieldOptions& opt);

void write_field_dump(const std::string& path_base, const BeltramiField& field,
                      double t, int K_max);

}  // namespace pinch
