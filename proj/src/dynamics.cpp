#include "pinch/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pinch/parallel.hpp"

namespace pinch {

Orbit iterate_orbit(const EntireMap& f, cplx z0, int steps, double escape_radius) {
  Orbit o;
  o.pts.reserve(static_cast<std::size_t>(steps) + 1);
  cplx z = z0;
  o.pts.push_back(z);
  for (int k = 0; k < steps; ++k) {
    bool sat = false;
    z = f.eval(z, sat);
    o.pts.push_back(z);
    double az = std::abs(z);
    if (sat || !std::isfinite(az)) {
      o.saturated = true;
      o.escaped = true;
      break;
    }
    if (az > escape_radius) {
      o.escaped = true;
      break;
    }
  }
  return o;
}

const char* stability_name(StabilityClass c) {
  switch (c) {
    case StabilityClass::superattracting: return "superattracting";
    case StabilityClass::attracting: return "attracting";
    case StabilityClass::repelling: return "repelling";
    case StabilityClass::parabolic_like: return "parabolic-like";
  }
  return "?";
}

const char* baker_type_name(BakerType t) {
  switch (t) {
    case BakerType::hyperbolic_I: return "hyperbolic-I";
    case BakerType::hyperbolic_II: return "hyperbolic-II";
    case BakerType::parabolic: return "parabolic";
    case BakerType::not_baker: return "not-baker";
    case BakerType::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

bool lex_less(const cplx& a, const cplx& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

// Shared kernel for classify_point and the renderer. absbuf is caller scratch
// so row loops do not reallocate per pixel.
PointClass classify_kernel(const EntireMap& f, cplx z0, const RenderConfig& cfg,
                           std::vector<double>& absbuf) {
  PointClass out;
  const int mp = std::clamp(cfg.max_period, 1, 15);
  cplx ring[16];
  absbuf.clear();
  cplx z = z0;
  ring[0] = z;
  absbuf.push_back(std::abs(z));
  bool exited = false;
  int n = 0;
  for (int k = 1; k <= cfg.budget; ++k) {
    bool sat = false;
    z = f.eval(z, sat);
    n = k;
    double az = std::abs(z);
    absbuf.push_back(az);
    if (sat || !std::isfinite(az) || az > cfg.escape_radius) {
      exited = true;
      break;
    }
    int avail = std::min(k, mp);
    for (int p = 1; p <= avail; ++p) {
      const cplx& prev = ring[(k - p) % (mp + 1)];
      if (std::abs(z - prev) < cfg.close_return_tol * (1.0 + az)) {
        out.label = PixelLabel::attracted;
        out.period = p;
        out.steps = k;
        cplx rep = z, w = z;
        for (int j = 1; j < p; ++j) {
          bool s2 = false;
          w = f.eval(w, s2);
          if (s2) break;
          if (lex_less(w, rep)) rep = w;
        }
        out.datum = rep;
        return out;
      }
    }
    ring[k % (mp + 1)] = z;
  }
  out.steps = n;
  out.datum = z;

  // Monotone-modulus tail over the steps actually taken, with a growth floor
  // so a bounded orbit creeping toward a limit does not count.
  bool monotone = false;
  if (n >= 4) {
    int tail = std::max(4, n / 4);
    int start = static_cast<int>(absbuf.size()) - 1 - tail;
    if (start < 0) start = 0;
    monotone = true;
    for (int i = start; i + 1 < static_cast<int>(absbuf.size()); ++i) {
      if (!(absbuf[i + 1] > absbuf[i])) {
        monotone = false;
        break;
      }
    }
    if (monotone) {
      double lo = absbuf[start], hi = absbuf.back();
      if (!(hi > lo * 1.001 + 0.5)) monotone = false;
    }
  }

  if (monotone) {
    out.label = PixelLabel::baker_candidate;
  } else if (exited) {
    out.label = PixelLabel::escape;
  } else {
    out.label = PixelLabel::unresolved;
  }
  return out;
}

}  // namespace

PointClass classify_point(const EntireMap& f, cplx z0, const RenderConfig& cfg) {
  std::vector<double> scratch;
  return classify_kernel(f, z0, cfg, scratch);
}

std::vector<FixedPoint> find_fixed_points(const EntireMap& f, const Window& w,
                                          int seed_grid, int newton_iters,
                                          double merge_tol) {
  std::vector<cplx> roots;
  for (int i = 0; i < seed_grid; ++i) {
    for (int j = 0; j < seed_grid; ++j) {
      cplx z(w.left() + (i + 0.5) * (2.0 * w.half_width / seed_grid),
             w.bottom() + (j + 0.5) * (2.0 * w.half_height / seed_grid));
      bool ok = false;
      for (int it = 0; it < newton_iters; ++it) {
        bool sat = false;
        cplx g = f.eval(z, sat) - z;
        if (sat || !std::isfinite(std::abs(g))) break;
        if (std::abs(g) < 1e-13 * (1.0 + std::abs(z))) {
          ok = true;
          break;
        }
        bool sat2 = false;
        cplx dg = f.deriv(z, sat2) - 1.0;
        if (sat2 || std::abs(dg) < 1e-14) break;
        z -= g / dg;
        if (std::abs(z) > 1e7) break;
      }
      if (ok && w.contains(z)) roots.push_back(z);
    }
  }
  std::sort(roots.begin(), roots.end(), lex_less);
  std::vector<FixedPoint> out;
  for (const cplx& r : roots) {
    bool dup = false;
    for (const FixedPoint& fp : out) {
      if (std::abs(r - fp.location) < merge_tol) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    bool sat = false;
    cplx m = f.deriv(r, sat);
    FixedPoint fp;
    fp.location = r;
    fp.multiplier = m;
    fp.residual = std::abs(f.eval(r, sat) - r);
    double am = std::abs(m);
    if (am < 1e-6) {
      fp.cls = StabilityClass::superattracting;
    } else if (std::abs(am - 1.0) <= 1e-6) {
      fp.cls = StabilityClass::parabolic_like;
    } else if (am < 1.0) {
      fp.cls = StabilityClass::attracting;
    } else {
      fp.cls = StabilityClass::repelling;
    }
    out.push_back(fp);
  }
  return out;
}

void write_fixed_points_csv(const std::string& path, const std::string& map_name,
                            const std::vector<FixedPoint>& fps) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path);
  std::fprintf(fp, "name,re,im,mult_re,mult_im,class\n");
  for (const FixedPoint& p : fps) {
    std::fprintf(fp, "%s,%.12g,%.12g,%.12g,%.12g,%s\n", map_name.c_str(),
                 p.location.real(), p.location.imag(), p.multiplier.real(),
                 p.multiplier.imag(), stability_name(p.cls));
  }
  std::fclose(fp);
}

RenderResult render_dynamical_plane(const EntireMap& f, const RenderConfig& cfg) {
  const Window& w = cfg.window;
  const std::size_t total = static_cast<std::size_t>(w.rows) * w.cols;
  RenderResult rr;
  rr.window = w;
  rr.label.assign(total, PixelLabel::unresolved);
  rr.cycle.assign(total, static_cast<std::int16_t>(-1));
  rr.steps.assign(total, 0);
  std::vector<cplx> datum(total);
  std::vector<std::int16_t> period(total, 0);

  parallel_for(w.rows, cfg.threads, [&](int row) {
    std::vector<double> scratch;
    scratch.reserve(static_cast<std::size_t>(cfg.budget) + 1);
    for (int col = 0; col < w.cols; ++col) {
      PointClass pc = classify_kernel(f, pixel_to_point(w, col, row), cfg, scratch);
      std::size_t idx = rr.index(col, row);
      rr.label[idx] = pc.label;
      rr.steps[idx] = static_cast<std::int16_t>(std::min(pc.steps, 32767));
      datum[idx] = pc.datum;
      period[idx] = static_cast<std::int16_t>(pc.period);
    }
  });

  // Registry pass is sequential and row-major so ids are reproducible.
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (rr.label[idx] != PixelLabel::attracted) continue;
    const cplx& rep = datum[idx];
    int id = -1;
    for (std::size_t j = 0; j < rr.cycle_reps.size(); ++j) {
      if (std::abs(rep - rr.cycle_reps[j]) < 1e-5 * (1.0 + std::abs(rr.cycle_reps[j]))) {
        id = static_cast<int>(j);
        break;
      }
    }
    if (id < 0) {
      if (rr.cycle_reps.size() < 64) {
        id = static_cast<int>(rr.cycle_reps.size());
        rr.cycle_reps.push_back(rep);
        rr.cycle_periods.push_back(period[idx]);
      } else {
        id = 63;
      }
    }
    rr.cycle[idx] = static_cast<std::int16_t>(id);
  }
  return rr;
}

Raster RenderResult::to_raster() const {
  Raster img(window.cols, window.rows);
  for (int row = 0; row < window.rows; ++row) {
    for (int col = 0; col < window.cols; ++col) {
      std::size_t idx = index(col, row);
      std::uint8_t rgb[3];
      legend_color(label[idx], cycle[idx] < 0 ? 0 : cycle[idx], rgb);
      img.set(col, row, rgb[0], rgb[1], rgb[2]);
    }
  }
  return img;
}

double RenderResult::label_fraction(PixelLabel l) const {
  std::size_t n = 0;
  for (PixelLabel v : label)
    if (v == l) ++n;
  return label.empty() ? 0.0 : static_cast<double>(n) / label.size();
}

std::vector<cplx> inverse_images(const EntireMap& f, cplx target,
                                 const std::vector<cplx>& seeds,
                                 const InverseOptions& opt) {
  std::vector<cplx> hits;
  double tol = opt.tol * (1.0 + std::abs(target));
  for (const cplx& s0 : seeds) {
    for (int k = -opt.translate_range; k <= opt.translate_range; ++k) {
      cplx z = s0 + cplx(0.0, 2.0 * kPi * k);
      bool ok = false;
      for (int it = 0; it < opt.newton_iters; ++it) {
        bool sat = false;
        cplx g = f.eval(z, sat) - target;
        if (sat || !std::isfinite(std::abs(g))) break;
        if (std::abs(g) < tol) {
          ok = true;
          break;
        }
        bool sat2 = false;
        cplx dg = f.deriv(z, sat2);
        if (sat2 || std::abs(dg) < 1e-14) break;
        z -= g / dg;
        if (std::abs(z) > 1e12) break;
      }
      if (ok) hits.push_back(z);
    }
  }
  std::sort(hits.begin(), hits.end(), lex_less);
  std::vector<cplx> out;
  for (const cplx& h : hits) {
    bool dup = false;
    for (const cplx& k : out) {
      if (std::abs(h - k) < opt.dedup_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(h);
  }
  return out;
}

BakerClassification baker_detect_classify(const EntireMap& f, cplx probe,
                                          const BakerOptions& opt) {
  BakerClassification out;
  std::vector<cplx> zs;
  zs.push_back(probe);
  bool saturated = false;
  for (int k = 0; k < opt.forward_steps; ++k) {
    bool sat = false;
    cplx z = f.eval(zs.back(), sat);
    if (sat || !std::isfinite(std::abs(z))) {
      saturated = true;
      break;
    }
    zs.push_back(z);
    if (std::abs(z) > opt.precision_radius) break;
  }
  int n = static_cast<int>(zs.size()) - 1;
  if (n < 8) {
    out.type = saturated ? BakerType::inconclusive : BakerType::not_baker;
    return out;
  }
  double mid_max = 0.0, tail_max = 0.0;
  for (int k = n / 4; k <= n / 2; ++k) mid_max = std::max(mid_max, std::abs(zs[k]));
  for (int k = 3 * n / 4; k <= n; ++k) tail_max = std::max(tail_max, std::abs(zs[k]));
  bool radius_escape = std::abs(zs.back()) > 10.0 * (1.0 + std::abs(probe)) ||
                       std::abs(zs.back()) > 50.0;
  bool trend_escape = tail_max - mid_max > opt.trend_margin;
  if (!saturated && !radius_escape && !trend_escape) {
    out.type = BakerType::not_baker;
    return out;
  }

  // Step-multiplier estimate over the post-burn-in tail.
  int burn = n / 4;
  double sum = 0.0;
  int used = 0;
  for (int k = burn; k + 1 < n; ++k) {
    double d0 = std::abs(zs[k + 1] - zs[k]);
    double d1 = std::abs(zs[k + 2] - zs[k + 1]);
    if (d0 < 1e-300) continue;
    sum += d1 / d0;
    ++used;
  }
  if (used < 4) {
    out.type = BakerType::inconclusive;
    return out;
  }
  double a = sum / used;
  out.a_estimate = a;
  out.ratios_used = used;
  if (std::abs(a - 1.0) <= opt.a_tol) {
    out.type = BakerType::parabolic;
    return out;
  }
  if (a < 1.0) {
    out.type = BakerType::inconclusive;
    return out;
  }

  // Backward orbit by nearest-branch Newton; the next seed extrapolates the
  // previous backward step by its measured complex contraction.
  cplx w = zs[0];
  cplx delta = (zs[1] - zs[0]) * (-1.0 / a);
  cplx q(1.0 / a, 0.0);
  double drift_radius = std::max(25.0, opt.drift_factor * 2.0 * (1.0 + std::abs(probe)));
  InverseOptions iopt;
  iopt.newton_iters = 80;
  iopt.tol = 1e-12;
  cplx prev_delta = delta;
  for (int k = 1; k <= opt.backward_steps; ++k) {
    cplx seed = w + delta;
    std::vector<cplx> cands = inverse_images(f, w, {seed}, iopt);
    if (cands.empty()) {
      out.type = BakerType::inconclusive;
      return out;
    }
    cplx best = cands[0];
    for (const cplx& c : cands)
      if (std::abs(c - seed) < std::abs(best - seed)) best = c;
    cplx step = best - w;
    w = best;
    out.backward_steps_taken = k;
    if (std::abs(step) < opt.backward_converge_tol * (1.0 + std::abs(w))) {
      out.type = BakerType::hyperbolic_I;
      out.zeta = SpherePoint::finite(w);
      return out;
    }
    if (std::abs(w) > drift_radius) {
      out.type = BakerType::hyperbolic_II;
      out.zeta = SpherePoint::infinity();
      return out;
    }
    if (k >= 2 && std::abs(prev_delta) > 1e-300) {
      q = step / prev_delta;
      double aq = std::abs(q);
      if (aq > 1.5) q *= 1.5 / aq;
    }
    prev_delta = step;
    delta = step * q;
  }
  out.type = BakerType::inconclusive;
  return out;
}

PostsingularSample postsingular_sample(const EntireMap& f, int depth_cap, double bound) {
  PostsingularSample ps;
  std::vector<cplx> values;
  for (const cplx& c : f.critical_seeds) {
    bool sat = false;
    cplx v = f.eval(c, sat);
    if (!sat && std::isfinite(std::abs(v))) values.push_back(v);
  }
  for (const cplx& a : f.asymptotic_values) values.push_back(a);
  for (const cplx& v0 : values) {
    cplx z = v0;
    for (int d = 0; d <= depth_cap; ++d) {
      if (!std::isfinite(std::abs(z)) || std::abs(z) > bound) break;
      ps.pts.push_back(z);
      ps.depth.push_back(d);
      bool sat = false;
      z = f.eval(z, sat);
      if (sat) break;
    }
  }
  return ps;
}

SemiHypReport semihyperbolic_probe(const EntireMap& f,
                                   const std::vector<cplx>& julia_samples,
                                   const PostsingularSample& ps, int depth,
                                   double probe_radius, double distance_threshold) {
  SemiHypReport rep;
  double dmin = 1e300;
  for (const cplx& a : julia_samples)
    for (const cplx& p : ps.pts) dmin = std::min(dmin, std::abs(a - p));
  rep.min_distance = ps.pts.empty() ? 0.0 : dmin;
  rep.distance_pass = rep.min_distance > distance_threshold;

  // Pull one branch of a small probe disc back `depth` times and look for
  // critical points inside the transported cloud.
  InverseOptions iopt;
  iopt.newton_iters = 80;
  int n_probe = std::min<std::size_t>(4, julia_samples.size());
  for (int pi = 0; pi < n_probe; ++pi) {
    cplx center = julia_samples[pi];
    std::vector<cplx> cloud;
    for (int j = 0; j < 8; ++j) {
      double th = 2.0 * kPi * j / 8.0;
      cloud.push_back(center + probe_radius * cplx(std::cos(th), std::sin(th)));
    }
    for (int d = 0; d < depth; ++d) {
      std::vector<cplx> cc = inverse_images(f, center, {center}, iopt);
      if (cc.empty()) break;
      cplx new_center = cc[0];
      for (const cplx& c : cc)
        if (std::abs(c - center) < std::abs(new_center - center)) new_center = c;
      std::vector<cplx> next;
      bool fail = false;
      for (const cplx& b : cloud) {
        std::vector<cplx> bb = inverse_images(f, b, {new_center}, iopt);
        if (bb.empty()) {
          fail = true;
          break;
        }
        cplx pick = bb[0];
        for (const cplx& c : bb)
          if (std::abs(c - new_center) < std::abs(pick - new_center)) pick = c;
        next.push_back(pick);
      }
      if (fail) break;
      center = new_center;
      cloud = next;
      double spread = 0.0;
      for (const cplx& b : cloud) spread = std::max(spread, std::abs(b - center));
      for (const cplx& cs : f.critical_seeds) {
        for (int k = -6; k <= 6; ++k) {
          cplx cp = f.periodic_2pii ? cs + cplx(0.0, 2.0 * kPi * k) : cs;
          if (std::abs(cp - center) < spread) ++rep.pullback_critical_hits;
          if (!f.periodic_2pii) break;
        }
      }
    }
  }
  rep.pass = rep.distance_pass && rep.pullback_critical_hits == 0;
  return rep;
}

ThinReport thin_at_infinity_probe(const RenderResult& rr, double R, double eps) {
  ThinReport rep;
  rep.epsilon = eps;
  const Window& w = rr.window;
  double inner = 0.5 * std::min(w.half_width, w.half_height);
  int nx = std::max(1, static_cast<int>(std::floor(2.0 * w.half_width / R)));
  int ny = std::max(1, static_cast<int>(std::floor(2.0 * w.half_height / R)));
  bool all_ok = true;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      cplx c(w.left() + (i + 0.5) * (2.0 * w.half_width / nx),
             w.bottom() + (j + 0.5) * (2.0 * w.half_height / ny));
      if (std::abs(c - w.center) < inner) continue;
      if (c.real() - R < w.left() || c.real() + R > w.right() ||
          c.imag() - R < w.bottom() || c.imag() + R > w.top())
        continue;
      long julia = 0, total = 0;
      for (int row = 0; row < w.rows; ++row) {
        for (int col = 0; col < w.cols; ++col) {
          if (std::abs(pixel_to_point(w, col, row) - c) > R) continue;
          ++total;
          PixelLabel l = rr.label[rr.index(col, row)];
          if (l == PixelLabel::escape || l == PixelLabel::unresolved) ++julia;
        }
      }
      if (total == 0) continue;
      double density = static_cast<double>(julia) / total;
      rep.discs.push_back({c, R, density});
      if (!(density < 1.0 - eps)) all_ok = false;
    }
  }
  rep.pass = all_ok && !rep.discs.empty();
  return rep;
}

}  // namespace pinch
