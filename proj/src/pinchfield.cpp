#include "pinch/pinchfield.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "pinch/parallel.hpp"

namespace pinch {

double PinchProfile::t_cap() const {
  double K = (1.0 + mu_max) / (1.0 - mu_max);
  double c = 0.5 * (K - 1.0) * (L_r - L_y);  // t/(1-t)^2 = c at the cap
  if (c <= 0.0) return 0.0;
  return ((2.0 * c + 1.0) - std::sqrt(4.0 * c + 1.0)) / (2.0 * c);
}

namespace {

void check_band_y(const PinchProfile& p, double y) {
  if (y < p.L_b - 1e-9 || y > p.L_r + 1e-9)
    throw std::domain_error("y outside the band");
}

void check_t(double t) {
  if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("t outside [0,1)");
}

}  // namespace

double v_t(const PinchProfile& p, double t, double y) {
  check_t(t);
  check_band_y(p, y);
  double m = p.m(t);
  if (y <= m) return y;
  double s = (y - m) / (p.L_r - m);
  return y + (p.tau(t) - p.L_r) * s * s;
}

double dv_dy(const PinchProfile& p, double t, double y) {
  check_t(t);
  check_band_y(p, y);
  double m = p.m(t);
  if (y <= m) return 1.0;
  return 1.0 + 2.0 * (p.tau(t) - p.L_r) * (y - m) / ((p.L_r - m) * (p.L_r - m));
}

cplx P_tilde(const PinchProfile& p, double t, cplx z) {
  return cplx(z.real(), v_t(p, t, z.imag()));
}

double mu_of_P(const PinchProfile& p, double t, double y) {
  double dv = dv_dy(p, t, y);
  double mu = (1.0 - dv) / (1.0 + dv);
  if (mu < -p.mu_max) mu = -p.mu_max;
  if (mu > p.mu_max) mu = p.mu_max;
  return mu;
}

cplx S_plus(const PinchProfile& p, double delta, cplx z) {
  if (std::abs(z) < 1e-300) throw std::domain_error("S_plus undefined at 0");
  double A = delta * p.L_r * p.L_b / (p.L_r - p.L_b);
  double B = kPi / 2.0 - delta * p.L_b / (p.L_r - p.L_b);
  return A * (-1.0 / z) + cplx(0.0, B);
}

cplx S_minus(const PinchProfile& p, double delta, cplx z) {
  double d = delta / (p.L_r - p.L_b);
  return d * (z - cplx(0.0, p.L_r)) + cplx(0.0, kPi / 2.0);
}

cplx S_plus_inv(const PinchProfile& p, double delta, cplx zeta) {
  double A = delta * p.L_r * p.L_b / (p.L_r - p.L_b);
  double B = kPi / 2.0 - delta * p.L_b / (p.L_r - p.L_b);
  return -A / (zeta - cplx(0.0, B));
}

cplx S_minus_inv(const PinchProfile& p, double delta, cplx zeta) {
  double d = delta / (p.L_r - p.L_b);
  return (zeta - cplx(0.0, kPi / 2.0)) / d + cplx(0.0, p.L_r);
}

cplx compose_linear_beltrami(cplx a2, cplx b2, cplx mu1) {
  if (std::abs(a2) < 1e-300) throw std::domain_error("degenerate linear part");
  return (b2 + mu1 * std::conj(a2)) / (a2 + mu1 * std::conj(b2));
}

cplx pullback_beltrami_holomorphic(cplx mu_at_image, cplx dh) {
  return mu_at_image * std::conj(dh) / dh;
}

std::optional<cplx> StripChart::phi(cplx band_z) const {
  cplx zeta = side == Side::plus ? S_plus(profile, delta, band_z)
                                 : S_minus(profile, delta, band_z);
  if (zeta.real() > 650.0) return std::nullopt;
  cplx w = std::exp(zeta);
  if (!(w.imag() > 0.0) || !std::isfinite(std::abs(w))) return std::nullopt;
  cplx hw = M(w);
  if (!(hw.imag() > 0.0)) return std::nullopt;
  return chart.from_halfplane(hw, chart.p_star + cplx(0.0, 1.0) * hw, 80, 1e-9);
}

std::optional<cplx> StripChart::psi(cplx u) const {
  bool ok = false;
  cplx w_h = chart.to_halfplane(u, ok);
  if (!ok || !(w_h.imag() > 0.0)) return std::nullopt;
  cplx w = M_inv(w_h);
  if (!(w.imag() > 0.0)) return std::nullopt;
  cplx zeta = std::log(w);
  return side == Side::plus ? S_plus_inv(profile, delta, zeta)
                            : S_minus_inv(profile, delta, zeta);
}

std::optional<std::pair<cplx, cplx>> StripChart::band_from_halfplane(
    cplx w_h, cplx dwh) const {
  if (!(w_h.imag() > 0.0)) return std::nullopt;
  const Eigen::Matrix2d& mi = M_inv.matrix();
  cplx den = mi(1, 0) * w_h + mi(1, 1);
  if (std::abs(den) < 1e-300) return std::nullopt;
  cplx w = (mi(0, 0) * w_h + mi(0, 1)) / den;
  if (!(w.imag() > 0.0)) return std::nullopt;
  cplx dw = dwh / (den * den);
  cplx zeta = std::log(w);
  cplx dzeta = dw / w;
  if (side == Side::minus) {
    double d = delta / (profile.L_r - profile.L_b);
    return std::make_pair(S_minus_inv(profile, delta, zeta), dzeta / d);
  }
  double A = delta * profile.L_r * profile.L_b / (profile.L_r - profile.L_b);
  double B = kPi / 2.0 - delta * profile.L_b / (profile.L_r - profile.L_b);
  cplx q = zeta - cplx(0.0, B);
  if (std::abs(q) < 1e-300) return std::nullopt;
  return std::make_pair(-A / q, dzeta * A / (q * q));
}

std::vector<StripChart> make_strip_charts(const KoenigsChart& chart,
                                          const std::vector<Leaf>& depth0_leaves,
                                          double delta,
                                          const PinchProfile& profile) {
  std::vector<StripChart> out;
  for (std::size_t li = 0; li < depth0_leaves.size(); ++li) {
    const Leaf& leaf = depth0_leaves[li];
    auto h_coord = [&](const SpherePoint& e) -> SpherePoint {
      if (e.inf) return SpherePoint::infinity();
      bool ok = false;
      cplx w = chart.to_halfplane(e.z, ok);
      if (!ok) throw std::invalid_argument("leaf endpoint cannot be charted");
      return SpherePoint::finite(cplx(w.real(), 0.0));
    };
    HalfPlaneGeodesic g = geodesic_between(h_coord(leaf.end_a), h_coord(leaf.end_b));
    Isometry M = isometry_to(g);
    for (Side s : {Side::plus, Side::minus}) {
      StripChart sc;
      sc.side = s;
      sc.delta = delta;
      sc.profile = profile;
      sc.chart = chart;
      sc.M = M;
      sc.M_inv = M.inverse();
      sc.leaf_index = static_cast<int>(li);
      out.push_back(std::move(sc));
    }
  }
  return out;
}

BeltramiField assemble_sigma_t(const EntireMap& f, const GrandOrbit& go,
                               const std::vector<StripChart>& charts,
                               const PinchProfile& profile, double t,
                               const FieldOptions& opt) {
  if (charts.empty()) throw std::invalid_argument("no strip charts");
  check_t(t);

  // Thm C hypothesis: leaves stay clear of the critical points of f.
  {
    std::vector<cplx> crit;
    for (const cplx& c : f.critical_seeds) {
      if (f.periodic_2pii) {
        for (int k = -8; k <= 8; ++k) crit.push_back(c + cplx(0.0, 2.0 * kPi * k));
      } else {
        crit.push_back(c);
      }
    }
    for (const Leaf& l : go.leaves) {
      for (const cplx& p : l.pts) {
        for (const cplx& c : crit) {
          if (std::abs(p - c) < opt.eps_sing)
            throw std::runtime_error("leaf meets a critical point of f");
        }
      }
    }
  }

  const Window& w = opt.window;
  const std::size_t total = static_cast<std::size_t>(w.rows) * w.cols;
  BeltramiField field;
  field.window = w;
  field.mu = Eigen::ArrayXXcd::Zero(w.rows, w.cols);
  field.leaf_id.assign(total, -1);
  field.depth.assign(total, -1);
  field.side_tag.assign(total, 0);

  const KoenigsChart& kchart = charts[0].chart;

  std::vector<int> row_overlap(w.rows, 0), row_sing(w.rows, 0);
  std::vector<long> row_claims(w.rows, 0);

  parallel_for(w.rows, opt.threads, [&](int row) {
    for (int col = 0; col < w.cols; ++col) {
      cplx z = pixel_to_point(w, col, row);
      if (!w.contains_with_margin(z, opt.support_margin)) continue;
      std::size_t idx = field.index(col, row);
      bool claimed = false;
      int claim_leaf = -1, claim_side = 0;
      cplx orbit = z;
      cplx dfk = 1.0;
      for (int k = 0; k <= opt.K_max; ++k) {
        if (k > 0) {
          bool sat = false;
          cplx d = f.cdf.eval(orbit, sat);
          if (sat) break;
          bool sat2 = false;
          cplx next = f.eval(orbit, sat2);
          if (sat2 || !std::isfinite(std::abs(next))) break;
          dfk *= d;
          orbit = next;
        }
        bool okv = false, okd = false;
        cplx phi_v = kchart.forward(orbit, okv);
        if (!okv) continue;
        cplx phi_d = kchart.forward_deriv(orbit, okd);
        if (!okd) continue;
        cplx w_h = cplx(0.0, -1.0) * phi_v;
        cplx dwh = cplx(0.0, -1.0) * phi_d;
        if (!(w_h.imag() > 0.0)) continue;
        for (const StripChart& sc : charts) {
          auto bp = sc.band_from_halfplane(w_h, dwh);
          if (!bp) continue;
          double y = bp->first.imag();
          bool in_band = sc.side == Side::minus
                             ? (y > profile.L_b && y <= profile.L_r)
                             : (y > profile.L_b && y < profile.L_r);
          if (!in_band) continue;
          if (claimed) {
            if (sc.leaf_index != claim_leaf ||
                static_cast<int>(sc.side) != claim_side)
              ++row_overlap[row];
            continue;
          }
          double mu0 = mu_of_P(profile, t, y);
          cplx dpsi = bp->second;
          cplx mu_val = 0.0;
          if (mu0 != 0.0) {
            if (std::abs(dpsi) < 1e-300 || std::abs(dfk) < 1e-300) {
              ++row_sing[row];
              continue;
            }
            cplx mu_w = pullback_beltrami_holomorphic(cplx(mu0, 0.0), dpsi);
            mu_val = pullback_beltrami_holomorphic(mu_w, dfk);
          }
          double am = std::abs(mu_val);
          if (am > profile.mu_max) mu_val *= profile.mu_max / am;
          field.mu(row, col) = mu_val;
          field.leaf_id[idx] = static_cast<std::int16_t>(sc.leaf_index);
          field.depth[idx] = static_cast<std::int8_t>(k);
          field.side_tag[idx] = static_cast<std::int8_t>(sc.side);
          claimed = true;
          claim_leaf = sc.leaf_index;
          claim_side = static_cast<int>(sc.side);
          ++row_claims[row];
        }
      }
    }
  });

  long claims = 0;
  for (int r = 0; r < w.rows; ++r) {
    field.overlap_count += row_overlap[r];
    field.sing_skips += row_sing[r];
    claims += row_claims[r];
  }
  field.support_fraction = static_cast<double>(claims) / total;
  field.max_abs = field.mu.abs().maxCoeff();
  return field;
}

void write_field_dump(const std::string& path_base, const BeltramiField& field,
                      double t, int K_max) {
  const Window& w = field.window;
  {
    std::ofstream bin(path_base + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open " + path_base + ".bin");
    for (int r = 0; r < w.rows; ++r) {
      for (int c = 0; c < w.cols; ++c) {
        double re = field.mu(r, c).real(), im = field.mu(r, c).imag();
        bin.write(reinterpret_cast<const char*>(&re), sizeof re);
        bin.write(reinterpret_cast<const char*>(&im), sizeof im);
      }
    }
  }
  nlohmann::json j;
  j["schema"] = "beltrami-field/1";
  j["window"] = {{"center_re", w.center.real()},
                 {"center_im", w.center.imag()},
                 {"half_width", w.half_width},
                 {"half_height", w.half_height},
                 {"cols", w.cols},
                 {"rows", w.rows}};
  j["t"] = t;
  j["k_max"] = K_max;
  j["max_abs"] = field.max_abs;
  j["dilatation"] = field.dilatation();
  j["overlap_count"] = field.overlap_count;
  j["sing_skips"] = field.sing_skips;
  j["support_fraction"] = field.support_fraction;
  std::ofstream hdr(path_base + ".json", std::ios::binary);
  if (!hdr) throw std::runtime_error("cannot open " + path_base + ".json");
  hdr << j.dump(1) << "\n";
}

}  // namespace pinch
