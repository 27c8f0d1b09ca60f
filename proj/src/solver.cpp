#include "pinch/solver.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace pinch {

namespace {

// In-place 2D transform, rows then columns. Eigen's inv is already 1/N scaled.
void fft2(Eigen::ArrayXXcd& a, bool forward) {
  Eigen::FFT<double> fft;
  const int R = static_cast<int>(a.rows()), C = static_cast<int>(a.cols());
  std::vector<std::complex<double>> in(C), out(C);
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) in[c] = a(r, c);
    if (forward)
      fft.fwd(out, in);
    else
      fft.inv(out, in);
    for (int c = 0; c < C; ++c) a(r, c) = out[c];
  }
  in.assign(R, {});
  out.assign(R, {});
  for (int c = 0; c < C; ++c) {
    for (int r = 0; r < R; ++r) in[r] = a(r, c);
    if (forward)
      fft.fwd(out, in);
    else
      fft.inv(out, in);
    for (int r = 0; r < R; ++r) a(r, c) = out[r];
  }
}

int signed_index(int k, int n) { return k < n / 2 ? k : k - n; }

struct Bilinear {
  cplx value;
  cplx d_dx;
  cplx d_dy;
};

// Pixel-center bilinear sample of the stored grid; valid anywhere inside the
// window (edge cells extrapolate their own slope).
Bilinear sample_grid(const Window& w, const Eigen::ArrayXXcd& h, cplx z) {
  double u = (z.real() - w.left()) / w.pitch_x() - 0.5;
  double v = (w.top() - z.imag()) / w.pitch_y() - 0.5;
  int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, w.cols - 2);
  int j0 = std::clamp(static_cast<int>(std::floor(v)), 0, w.rows - 2);
  double fu = u - i0, fv = v - j0;
  cplx h00 = h(j0, i0), h01 = h(j0, i0 + 1);
  cplx h10 = h(j0 + 1, i0), h11 = h(j0 + 1, i0 + 1);
  Bilinear b;
  b.value = (1 - fu) * (1 - fv) * h00 + fu * (1 - fv) * h01 +
            (1 - fu) * fv * h10 + fu * fv * h11;
  cplx du = (1 - fv) * (h01 - h00) + fv * (h11 - h10);
  cplx dv = (1 - fu) * (h10 - h00) + fu * (h11 - h01);
  b.d_dx = du / w.pitch_x();
  b.d_dy = -dv / w.pitch_y();
  return b;
}

}  // namespace

cplx QCMap::evaluate(cplx z) const {
  if (!window.contains(z)) return affine_a * z + affine_b;
  return sample_grid(window, h, z).value;
}

cplx QCMap::invert(cplx w, bool& ok) const {
  ok = false;
  cplx z = (w - affine_b) / affine_a;
  const double tol = 1e-11 * (1.0 + std::abs(w));
  for (int it = 0; it < 60; ++it) {
    z = cplx(std::clamp(z.real(), window.left(), window.right()),
             std::clamp(z.imag(), window.bottom(), window.top()));
    Bilinear s = sample_grid(window, h, z);
    cplx r = w - s.value;
    if (std::abs(r) < tol) {
      ok = true;
      return z;
    }
    cplx hz = 0.5 * (s.d_dx - cplx(0, 1) * s.d_dy);
    cplx hzb = 0.5 * (s.d_dx + cplx(0, 1) * s.d_dy);
    double det = std::norm(hz) - std::norm(hzb);
    if (std::abs(det) < 1e-300) return z;
    z += (std::conj(hz) * r - hzb * std::conj(r)) / det;
  }
  return z;
}

int QCMap::negative_cells() const {
  // Domain cells traversed (r,c)->(r,c+1)->(r+1,c+1)->(r+1,c) run clockwise
  // in the plane, so an orientation-preserving image has negative shoelace.
  int bad = 0;
  for (int r = 0; r + 1 < window.rows; ++r) {
    for (int c = 0; c + 1 < window.cols; ++c) {
      cplx q0 = h(r, c), q1 = h(r, c + 1), q2 = h(r + 1, c + 1), q3 = h(r + 1, c);
      double s = std::imag(std::conj(q0) * q1) + std::imag(std::conj(q1) * q2) +
                 std::imag(std::conj(q2) * q3) + std::imag(std::conj(q3) * q0);
      if (s >= 0.0) ++bad;
    }
  }
  return bad;
}

double QCMap::rim_affine_deviation() const {
  int band_r = std::max(1, window.rows / 20);
  int band_c = std::max(1, window.cols / 20);
  double worst = 0.0;
  for (int r = 0; r < window.rows; ++r) {
    bool edge_r = r < band_r || r >= window.rows - band_r;
    for (int c = 0; c < window.cols; ++c) {
      if (!edge_r && c >= band_c && c < window.cols - band_c) continue;
      cplx z = pixel_to_point(window, c, r);
      cplx aff = affine_a * z + affine_b;
      worst = std::max(worst, std::abs(h(r, c) - aff) / (1.0 + std::abs(aff)));
    }
  }
  return worst;
}

QCMap solve_beltrami(const BeltramiField& field, const SolverConfig& cfg) {
  const int N = cfg.resolution;
  if (N < 256 || (N & (N - 1)) != 0)
    throw std::invalid_argument("resolution must be a power of two, at least 256");
  Window w = cfg.window;
  w.cols = N;
  w.rows = N;
  if (cfg.p == cfg.q || !w.contains(cfg.p) || !w.contains(cfg.q))
    throw std::invalid_argument("normalization points must be distinct and inside the window");

  // mu on the solver grid, math orientation (row m has increasing Im).
  const bool aligned = field.window.cols == N && field.window.rows == N &&
                       field.window.center == w.center &&
                       field.window.half_width == w.half_width &&
                       field.window.half_height == w.half_height;
  Eigen::ArrayXXcd mu(N, N);
  double mu_sup = 0.0;
  for (int m = 0; m < N; ++m) {
    int r = N - 1 - m;
    for (int c = 0; c < N; ++c) {
      cplx val = 0.0;
      if (aligned) {
        val = field.mu(r, c);
      } else {
        auto px = point_to_pixel(field.window, pixel_to_point(w, c, r));
        if (px) val = field.mu(px->second, px->first);
      }
      mu(m, c) = val;
      double a = std::abs(val);
      mu_sup = std::max(mu_sup, a);
      if (a > 0.0 && !w.contains_with_margin(pixel_to_point(w, c, r), 0.10))
        throw std::runtime_error("field support touches the window margin");
    }
  }
  if (mu_sup >= 1.0) throw std::invalid_argument("|mu| must stay strictly below 1");

  QCMap out;
  out.window = w;
  out.mu_sup = mu_sup;
  out.p = cfg.p;
  out.q = cfg.q;
  out.h.resize(N, N);

  Eigen::ArrayXXcd g = mu;
  double mu_l2 = std::sqrt(mu.abs2().sum());
  if (mu_l2 > 0.0) {
    Eigen::ArrayXXcd bsym(N, N), csym(N, N);
    const double kx = 2.0 * kPi / (2.0 * w.half_width);
    const double ky = 2.0 * kPi / (2.0 * w.half_height);
    for (int m = 0; m < N; ++m) {
      for (int c = 0; c < N; ++c) {
        cplx kappa(kx * signed_index(c, N), ky * signed_index(m, N));
        if (kappa == cplx(0.0, 0.0)) {
          bsym(m, c) = 0.0;
          csym(m, c) = 0.0;
        } else {
          bsym(m, c) = std::conj(kappa) / kappa;
          csym(m, c) = cplx(0.0, -2.0) / kappa;
        }
      }
    }
    double prev = std::numeric_limits<double>::infinity();
    int rising = 0;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      Eigen::ArrayXXcd bg = g;
      fft2(bg, true);
      bg *= bsym;
      fft2(bg, false);
      Eigen::ArrayXXcd g_next = mu + mu * bg;
      out.residual = std::sqrt((g_next - g).abs2().sum()) / mu_l2;
      out.iterations = it + 1;
      g.swap(g_next);
      if (out.residual < cfg.tolerance) break;
      if (out.residual > prev) {
        if (++rising >= 5) throw std::runtime_error("Neumann iteration diverged");
      } else {
        rising = 0;
      }
      prev = out.residual;
    }
    Eigen::ArrayXXcd cg = g;
    fft2(cg, true);
    cg *= csym;
    fft2(cg, false);
    for (int m = 0; m < N; ++m) {
      int r = N - 1 - m;
      for (int c = 0; c < N; ++c)
        out.h(r, c) = pixel_to_point(w, c, r) + cg(m, c);
    }
  } else {
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c) out.h(r, c) = pixel_to_point(w, c, r);
  }

  cplx hp = sample_grid(w, out.h, cfg.p).value;
  cplx hq = sample_grid(w, out.h, cfg.q).value;
  if (hp == hq) throw std::runtime_error("degenerate normalization");
  out.affine_a = (cfg.p - cfg.q) / (hp - hq);
  out.affine_b = cfg.p - out.affine_a * hp;
  out.h = out.affine_a * out.h + out.affine_b;
  return out;
}

cplx conjugate_map(const EntireMap& f, const QCMap& h, cplx z, bool& ok) {
  ok = false;
  bool inv_ok = false;
  cplx zi = h.invert(z, inv_ok);
  if (!inv_ok) return z;
  bool sat = false;
  cplx fz = f.eval(zi, sat);
  if (sat || !h.window.contains(fz)) return z;
  ok = true;
  return h.evaluate(fz);
}

double conjugacy_beltrami_estimate(const EntireMap& f, const QCMap& h, cplx z,
                                   double step, bool& ok) {
  ok = false;
  cplx s(step, 0.0), is(0.0, step);
  bool o1 = false, o2 = false, o3 = false, o4 = false;
  cplx fe = conjugate_map(f, h, z + s, o1);
  cplx fw = conjugate_map(f, h, z - s, o2);
  cplx fn = conjugate_map(f, h, z + is, o3);
  cplx fs = conjugate_map(f, h, z - is, o4);
  if (!(o1 && o2 && o3 && o4)) return 1.0;
  cplx fx = (fe - fw) / (2.0 * step);
  cplx fy = (fn - fs) / (2.0 * step);
  cplx fz = 0.5 * (fx - cplx(0, 1) * fy);
  cplx fzb = 0.5 * (fx + cplx(0, 1) * fy);
  if (std::abs(fz) < 1e-12) return 1.0;
  ok = true;
  return std::abs(fzb) / std::abs(fz);
}

std::vector<DiagRow> deformation_diagnostics(
    const std::vector<DeformationFrame>& frames, const GrandOrbit& go,
    const std::vector<int>& tracked_leaves,
    const std::vector<ProbeDisc>& probes) {
  std::vector<DiagRow> rows;
  for (const DeformationFrame& fr : frames) {
    for (int li : tracked_leaves) {
      const Leaf& leaf = go.leaves.at(li);
      std::vector<SpherePoint> img;
      img.reserve(leaf.pts.size() + 2);
      for (cplx p : leaf.pts) img.push_back(SpherePoint::finite(fr.map->evaluate(p)));
      double finite_diam = spherical_diameter(img);
      if (leaf.end_a.inf) img.push_back(SpherePoint::infinity());
      if (leaf.end_b.inf) img.push_back(SpherePoint::infinity());
      rows.push_back({fr.t, "leaf_diam_s", li, spherical_diameter(img)});
      rows.push_back({fr.t, "leaf_diam_s_fin", li, finite_diam});
    }
    for (size_t pi = 0; pi < probes.size(); ++pi) {
      const ProbeDisc& pd = probes[pi];
      std::vector<SpherePoint> orig, img;
      for (int k = 0; k < pd.samples; ++k) {
        double th = 2.0 * kPi * k / pd.samples;
        cplx z = pd.center + pd.radius * cplx(std::cos(th), std::sin(th));
        orig.push_back(SpherePoint::finite(z));
        img.push_back(SpherePoint::finite(fr.map->evaluate(z)));
      }
      double d0 = spherical_diameter(orig);
      rows.push_back({fr.t, "probe_diam_ratio", static_cast<int>(pi),
                      spherical_diameter(img) / d0});
    }
    rows.push_back({fr.t, "residual", 0, fr.map->residual});
    rows.push_back({fr.t, "mu_sup", 0, fr.map->mu_sup});
    rows.push_back({fr.t, "dilatation", 0,
                    (1.0 + fr.field_max_abs) / (1.0 - fr.field_max_abs)});
  }
  return rows;
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,kind,index,value\n";
  char buf[128];
  for (const DiagRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.12g,%s,%d,%.12g\n", r.t, r.kind.c_str(),
                  r.index, r.value);
    out << buf;
  }
}

void write_qcmap_dump(const std::string& path_base, const QCMap& map, double t) {
  {
    std::ofstream bin(path_base + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open " + path_base + ".bin");
    for (int r = 0; r < map.window.rows; ++r) {
      for (int c = 0; c < map.window.cols; ++c) {
        double re = map.h(r, c).real(), im = map.h(r, c).imag();
        bin.write(reinterpret_cast<const char*>(&re), sizeof re);
        bin.write(reinterpret_cast<const char*>(&im), sizeof im);
      }
    }
  }
  nlohmann::json j;
  j["schema"] = "qcmap/1";
  j["resolution"] = map.window.cols;
  j["window"] = {{"center_re", map.window.center.real()},
                 {"center_im", map.window.center.imag()},
                 {"half_width", map.window.half_width},
                 {"half_height", map.window.half_height}};
  j["residual"] = map.residual;
  j["iterations"] = map.iterations;
  j["mu_sup"] = map.mu_sup;
  j["p"] = {map.p.real(), map.p.imag()};
  j["q"] = {map.q.real(), map.q.imag()};
  j["affine_a"] = {map.affine_a.real(), map.affine_a.imag()};
  j["affine_b"] = {map.affine_b.real(), map.affine_b.imag()};
  j["t"] = t;
  std::ofstream hdr(path_base + ".json", std::ios::binary);
  if (!hdr) throw std::runtime_error("cannot open " + path_base + ".json");
  hdr << j.dump(1) << "\n";
}

}  // namespace pinch
