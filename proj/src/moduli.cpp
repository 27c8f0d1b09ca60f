#include "pinch/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <stdexcept>

namespace pinch {

AnnulusSpec AnnulusSpec::round_spec(cplx center, double r, double R) {
  if (!(0.0 < r && r < R)) throw std::invalid_argument("need 0 < r < R");
  AnnulusSpec a;
  a.round = true;
  a.center = center;
  a.r = r;
  a.R = R;
  return a;
}

AnnulusSpec AnnulusSpec::polygonal(Polyline outer, Polyline inner) {
  AnnulusSpec a;
  a.round = false;
  a.outer = std::move(outer);
  a.inner = std::move(inner);
  a.outer.closed = true;
  a.inner.closed = true;
  return a;
}

double round_annulus_modulus(const AnnulusSpec& a) {
  if (!a.round) throw std::invalid_argument("round spec required");
  return std::log(a.R / a.r) / (2.0 * kPi);
}

bool point_in_polygon(const Polyline& poly, cplx p) {
  bool in = false;
  std::size_t n = poly.pts.size();
  if (n < 3) return false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const cplx& a = poly.pts[i];
    const cplx& b = poly.pts[j];
    if ((a.imag() > p.imag()) != (b.imag() > p.imag())) {
      double x = a.real() +
                 (p.imag() - a.imag()) / (b.imag() - a.imag()) * (b.real() - a.real());
      if (p.real() < x) in = !in;
    }
  }
  return in;
}

namespace {

double dist_to_segment(cplx p, cplx a, cplx b) {
  cplx ab = b - a;
  double n2 = std::norm(ab);
  if (n2 < 1e-300) return std::abs(p - a);
  double t = std::clamp(((p - a) * std::conj(ab)).real() / n2, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

double dist_to_polyline(const Polyline& poly, cplx p) {
  double d = 1e300;
  std::size_t n = poly.pts.size();
  if (n == 0) return d;
  if (n == 1) return std::abs(p - poly.pts[0]);
  std::size_t m = poly.closed ? n : n - 1;
  for (std::size_t i = 0; i < m; ++i)
    d = std::min(d, dist_to_segment(p, poly.pts[i], poly.pts[(i + 1) % n]));
  return d;
}

// Square-cell lattice; row 0 at the bottom. Steps cover rook, bishop and
// knight moves so oblique paths overshoot true length by at most ~1.3%.
struct Lattice {
  int rows = 0, cols = 0;
  double h = 1.0;
  cplx origin;  // center of cell (0, 0)
  std::vector<std::uint8_t> free_, term_a, term_b;
  // Length of the segment joining the true terminal boundary to the cell
  // center; replaces the h/2 half-cell fudge so L is a proper quadrature.
  std::vector<double> enter_a, enter_b;

  int idx(int r, int c) const { return r * cols + c; }
  cplx center(int r, int c) const { return origin + cplx(c * h, r * h); }
  bool ok(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
  bool usable(int r, int c) const { return ok(r, c) && free_[idx(r, c)]; }
};

struct Step {
  int dr, dc;
  double len;
  int g1r, g1c, g2r, g2c;  // cells that must be free for the move, relative
};

const std::vector<Step>& lattice_steps() {
  static const std::vector<Step> s = [] {
    std::vector<Step> v;
    const double r2 = std::sqrt(2.0), r5 = std::sqrt(5.0);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        if (dr == 0 || dc == 0)
          v.push_back({dr, dc, 1.0, 0, 0, 0, 0});
        else
          v.push_back({dr, dc, r2, dr, 0, 0, dc});
      }
    const int kn[8][2] = {{1, 2},  {1, -2},  {-1, 2},  {-1, -2},
                          {2, 1},  {2, -1},  {-2, 1},  {-2, -1}};
    for (const auto& k : kn) {
      int dr = k[0], dc = k[1];
      Step st{dr, dc, r5, 0, 0, 0, 0};
      if (std::abs(dr) == 1) {
        st.g1r = 0;
        st.g1c = dc / 2;
        st.g2r = dr;
        st.g2c = dc / 2;
      } else {
        st.g1r = dr / 2;
        st.g1c = 0;
        st.g2r = dr / 2;
        st.g2c = dc;
      }
      v.push_back(st);
    }
    return v;
  }();
  return s;
}

struct PathResult {
  bool reachable = false;
  double L = 0.0;
  std::vector<double> crossing;  // per-cell crossing length of the minimal path
};

PathResult lattice_shortest(const Lattice& lat, const std::vector<double>& rho) {
  const int n = lat.rows * lat.cols;
  const double INF = 1e300;
  PathResult res;
  res.crossing.assign(n, 0.0);
  std::vector<double> dist(n, INF);
  std::vector<int> parent(n, -1);
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
  for (int i = 0; i < n; ++i) {
    if (lat.term_a[i] && lat.free_[i]) {
      dist[i] = rho[i] * lat.enter_a[i];
      pq.push({dist[i], i});
    }
  }
  std::vector<std::uint8_t> done(n, 0);
  const auto& steps = lattice_steps();
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (done[u] || d > dist[u]) continue;
    done[u] = 1;
    if (lat.term_b[u]) continue;  // paths end on first arrival
    int ur = u / lat.cols, uc = u % lat.cols;
    for (const Step& st : steps) {
      int vr = ur + st.dr, vc = uc + st.dc;
      if (!lat.usable(vr, vc)) continue;
      if (st.len > 1.5) {
        if (!lat.usable(ur + st.g1r, uc + st.g1c) ||
            !lat.usable(ur + st.g2r, uc + st.g2c))
          continue;
      }
      int v = lat.idx(vr, vc);
      if (done[v]) continue;
      double w = 0.5 * (rho[u] + rho[v]) * st.len * lat.h;
      if (dist[u] + w < dist[v]) {
        dist[v] = dist[u] + w;
        parent[v] = u;
        pq.push({dist[v], v});
      }
    }
  }
  // Aggregate crossings over the whole bundle of settled geodesics, one per
  // reachable terminal; the bound itself uses only the shortest of them.
  double Lmin = INF;
  for (int t = 0; t < n; ++t) {
    if (!lat.term_b[t] || !done[t]) continue;
    Lmin = std::min(Lmin, dist[t] + rho[t] * lat.enter_b[t]);
    res.crossing[t] += lat.enter_b[t];
    int v = t;
    while (parent[v] >= 0) {
      int u = parent[v];
      int ur = u / lat.cols, uc = u % lat.cols;
      int vr = v / lat.cols, vc = v % lat.cols;
      double len = std::hypot(double(vr - ur), double(vc - uc)) * lat.h;
      res.crossing[u] += 0.5 * len;
      res.crossing[v] += 0.5 * len;
      v = u;
    }
    res.crossing[v] += lat.enter_a[v];
  }
  if (Lmin >= INF) return res;
  res.reachable = true;
  res.L = Lmin;
  return res;
}

// The geodesic bundle visits each cell only O(1) times, so the raw crossing
// field is shot noise on top of the extremal profile. A short box blur over
// the free cells recovers the profile without disturbing its large-scale
// shape; the certified bound is unaffected since it never sees the update.
void smooth_over_free(const Lattice& lat, std::vector<double>& x, int passes) {
  std::vector<double> y(x.size());
  for (int p = 0; p < passes; ++p) {
    for (int r = 0; r < lat.rows; ++r) {
      for (int c = 0; c < lat.cols; ++c) {
        int i = lat.idx(r, c);
        if (!lat.free_[i]) {
          y[i] = 0.0;
          continue;
        }
        double s = 0.0;
        int cnt = 0;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc)
            if (lat.usable(r + dr, c + dc)) {
              s += x[lat.idx(r + dr, c + dc)];
              ++cnt;
            }
        y[i] = s / cnt;
      }
    }
    x.swap(y);
  }
}

double lattice_extremal_length(const Lattice& lat, const ExtremalLengthOptions& opt) {
  const int n = lat.rows * lat.cols;
  const double area = lat.h * lat.h;
  std::vector<double> rho(n, 0.0), cum(n, 0.0);
  long free_count = 0;
  for (int i = 0; i < n; ++i)
    if (lat.free_[i]) {
      rho[i] = 1.0;
      ++free_count;
    }
  if (free_count == 0) return 0.0;
  auto energy = [&](const std::vector<double>& d) {
    double A = 0.0;
    for (int i = 0; i < n; ++i)
      if (lat.free_[i]) A += d[i] * d[i];
    return A * area;
  };
  double A = energy(rho);
  for (double& x : rho) x /= std::sqrt(A);
  double best = 0.0;
  for (int it = 0; it < opt.iterations; ++it) {
    PathResult pr = lattice_shortest(lat, rho);
    if (!pr.reachable) return 0.0;
    best = std::max(best, pr.L * pr.L / energy(rho));
    smooth_over_free(lat, pr.crossing, 2);
    double Au = energy(pr.crossing);
    if (Au < 1e-300) break;
    // Running mean of the normalized crossing samples; the per-iteration
    // angular noise of the bundle averages out at rate 1/n, so the bound
    // evaluated at the mean climbs where a fixed-step blend stalls.
    double su = 1.0 / std::sqrt(Au);
    for (int i = 0; i < n; ++i)
      if (lat.free_[i]) cum[i] += pr.crossing[i] * su;
    double An = energy(cum);
    if (An < 1e-300) break;
    double sn = 1.0 / std::sqrt(An);
    for (int i = 0; i < n; ++i) rho[i] = cum[i] * sn;
  }
  return best;
}

Lattice make_lattice(double left, double bottom, double width, double height,
                     int resolution) {
  Lattice lat;
  lat.h = width / resolution;
  lat.cols = resolution;
  lat.rows = std::max(4, static_cast<int>(std::lround(height / lat.h)));
  lat.origin = cplx(left + 0.5 * lat.h, bottom + 0.5 * lat.h);
  int n = lat.rows * lat.cols;
  lat.free_.assign(n, 0);
  lat.term_a.assign(n, 0);
  lat.term_b.assign(n, 0);
  lat.enter_a.assign(n, 0.5 * lat.h);
  lat.enter_b.assign(n, 0.5 * lat.h);
  return lat;
}

bool inside_annulus(const AnnulusSpec& a, cplx p) {
  if (a.round) {
    double d = std::abs(p - a.center);
    return d > a.r && d < a.R;
  }
  return point_in_polygon(a.outer, p) && !point_in_polygon(a.inner, p);
}

double inner_boundary_dist(const AnnulusSpec& a, cplx p) {
  if (a.round) return std::abs(p - a.center) - a.r;
  return dist_to_polyline(a.inner, p);
}

double outer_boundary_dist(const AnnulusSpec& a, cplx p) {
  if (a.round) return a.R - std::abs(p - a.center);
  return dist_to_polyline(a.outer, p);
}

void annulus_bbox(const AnnulusSpec& a, double& left, double& bottom,
                  double& width, double& height) {
  if (a.round) {
    left = a.center.real() - a.R;
    bottom = a.center.imag() - a.R;
    width = 2.0 * a.R;
    height = 2.0 * a.R;
  } else {
    double l = 1e300, b = 1e300, rr = -1e300, t = -1e300;
    for (const cplx& p : a.outer.pts) {
      l = std::min(l, p.real());
      rr = std::max(rr, p.real());
      b = std::min(b, p.imag());
      t = std::max(t, p.imag());
    }
    left = l;
    bottom = b;
    width = rr - l;
    height = t - b;
  }
  double pad = 0.02 * std::max(width, height);
  left -= pad;
  bottom -= pad;
  width += 2.0 * pad;
  height += 2.0 * pad;
}

cplx annulus_hole_center(const AnnulusSpec& a) {
  if (a.round) return a.center;
  cplx s{0.0, 0.0};
  for (const cplx& p : a.inner.pts) s += p;
  return s / static_cast<double>(a.inner.pts.size());
}

}  // namespace

double annulus_extremal_length(const AnnulusSpec& a, FamilyKind kind,
                               const ExtremalLengthOptions& opt) {
  double left, bottom, width, height;
  annulus_bbox(a, left, bottom, width, height);
  Lattice lat = make_lattice(left, bottom, width, height, opt.resolution);
  const double h = lat.h;
  for (int r = 0; r < lat.rows; ++r) {
    for (int c = 0; c < lat.cols; ++c) {
      cplx p = lat.center(r, c);
      if (inside_annulus(a, p)) lat.free_[lat.idx(r, c)] = 1;
    }
  }
  if (kind == FamilyKind::joining) {
    for (int r = 0; r < lat.rows; ++r) {
      for (int c = 0; c < lat.cols; ++c) {
        int i = lat.idx(r, c);
        if (!lat.free_[i]) continue;
        cplx p = lat.center(r, c);
        double da = inner_boundary_dist(a, p);
        double db = outer_boundary_dist(a, p);
        if (da < 1.2 * h) {
          lat.term_a[i] = 1;
          lat.enter_a[i] = std::max(da, 0.0);
        }
        if (db < 1.2 * h) {
          lat.term_b[i] = 1;
          lat.enter_b[i] = std::max(db, 0.0);
        }
      }
    }
  } else {
    // Radial cut east of the hole: block a one-cell band and join its sides.
    cplx hc = annulus_hole_center(a);
    for (int r = 0; r < lat.rows; ++r) {
      for (int c = 0; c < lat.cols; ++c) {
        int i = lat.idx(r, c);
        if (!lat.free_[i]) continue;
        cplx d = lat.center(r, c) - hc;
        if (d.real() <= 0.0) continue;
        if (std::abs(d.imag()) < 0.55 * h) {
          lat.free_[i] = 0;
        } else if (d.imag() <= -0.55 * h && d.imag() > -1.7 * h) {
          lat.term_a[i] = 1;
          lat.enter_a[i] = -d.imag();  // closing segment down to the cut line
        } else if (d.imag() >= 0.55 * h && d.imag() < 1.7 * h) {
          lat.term_b[i] = 1;
          lat.enter_b[i] = d.imag();
        }
      }
    }
  }
  return lattice_extremal_length(lat, opt);
}

double annulus_modulus(const AnnulusSpec& a, const ExtremalLengthOptions& opt) {
  if (a.round) return round_annulus_modulus(a);
  if (a.outer.pts.size() < 3 || a.inner.pts.size() < 3) return 0.0;
  if (!point_in_polygon(a.outer, a.inner.pts[0])) return 0.0;
  return annulus_extremal_length(a, FamilyKind::joining, opt);
}

double quadrilateral_module(const QuadrilateralSpec& q,
                            const ExtremalLengthOptions& opt) {
  const std::size_t n = q.boundary.pts.size();
  if (n < 4) throw std::invalid_argument("quadrilateral needs >= 4 vertices");
  for (int k = 0; k < 4; ++k)
    if (q.marks[k] < 0 || q.marks[k] >= static_cast<int>(n))
      throw std::invalid_argument("mark out of range");

  auto side = [&](int from, int to) {
    Polyline s;
    int i = from;
    s.pts.push_back(q.boundary.pts[i]);
    while (i != to) {
      i = (i + 1) % static_cast<int>(n);
      s.pts.push_back(q.boundary.pts[i]);
    }
    return s;
  };
  Polyline side_a = side(q.marks[0], q.marks[1]);
  Polyline side_b = side(q.marks[2], q.marks[3]);

  double left, bottom, width, height;
  {
    double l = 1e300, b = 1e300, rr = -1e300, t = -1e300;
    for (const cplx& p : q.boundary.pts) {
      l = std::min(l, p.real());
      rr = std::max(rr, p.real());
      b = std::min(b, p.imag());
      t = std::max(t, p.imag());
    }
    double pad = 0.02 * std::max(rr - l, t - b);
    left = l - pad;
    bottom = b - pad;
    width = rr - l + 2.0 * pad;
    height = t - b + 2.0 * pad;
  }
  Lattice lat = make_lattice(left, bottom, width, height, opt.resolution);
  Polyline closed = q.boundary;
  closed.closed = true;
  for (int r = 0; r < lat.rows; ++r) {
    for (int c = 0; c < lat.cols; ++c) {
      cplx p = lat.center(r, c);
      if (!point_in_polygon(closed, p)) continue;
      int i = lat.idx(r, c);
      lat.free_[i] = 1;
      double da = dist_to_polyline(side_a, p);
      double db = dist_to_polyline(side_b, p);
      if (da < 1.2 * lat.h) {
        lat.term_a[i] = 1;
        lat.enter_a[i] = da;
      }
      if (db < 1.2 * lat.h) {
        lat.term_b[i] = 1;
        lat.enter_b[i] = db;
      }
    }
  }
  return lattice_extremal_length(lat, opt);
}

double extremal_length_grid(const std::vector<Polyline>& curves,
                            const Window& window,
                            const ExtremalLengthOptions& opt) {
  if (curves.empty()) throw std::invalid_argument("empty curve family");
  Lattice lat = make_lattice(window.left(), window.bottom(), 2.0 * window.half_width,
                             2.0 * window.half_height, opt.resolution);
  const int n = lat.rows * lat.cols;
  std::fill(lat.free_.begin(), lat.free_.end(), 1);
  const double area = lat.h * lat.h;

  auto cell_of = [&](cplx p) -> int {
    int c = static_cast<int>(std::floor((p.real() - lat.origin.real()) / lat.h + 0.5));
    int r = static_cast<int>(std::floor((p.imag() - lat.origin.imag()) / lat.h + 0.5));
    if (!lat.ok(r, c)) return -1;
    return lat.idx(r, c);
  };
  // Pre-sampled crossing lists: (cell, length) pairs per curve.
  std::vector<std::vector<std::pair<int, double>>> tracks(curves.size());
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const Polyline& cv = curves[ci];
    std::size_t m = cv.pts.size();
    if (m < 2) continue;
    std::size_t segs = cv.closed ? m : m - 1;
    for (std::size_t i = 0; i < segs; ++i) {
      cplx a = cv.pts[i], b = cv.pts[(i + 1) % m];
      double len = std::abs(b - a);
      int pieces = std::max(1, static_cast<int>(std::ceil(len / (0.5 * lat.h))));
      for (int k = 0; k < pieces; ++k) {
        cplx mid = a + (b - a) * ((k + 0.5) / pieces);
        int cell = cell_of(mid);
        if (cell >= 0) tracks[ci].push_back({cell, len / pieces});
      }
    }
  }

  std::vector<double> rho(n, 1.0);
  auto energy = [&](const std::vector<double>& d) {
    double A = 0.0;
    for (double x : d) A += x * x;
    return A * area;
  };
  double A0 = energy(rho);
  for (double& x : rho) x /= std::sqrt(A0);
  double best = 0.0;
  std::vector<double> u(n), cum(n, 0.0);
  for (int it = 0; it < opt.iterations; ++it) {
    double L = 1e300;
    int arg = -1;
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
      double len = 0.0;
      for (const auto& [cell, dl] : tracks[ci]) len += rho[cell] * dl;
      if (len < L) {
        L = len;
        arg = static_cast<int>(ci);
      }
    }
    if (arg < 0) return 0.0;
    best = std::max(best, L * L / energy(rho));
    std::fill(u.begin(), u.end(), 0.0);
    for (const auto& [cell, dl] : tracks[arg]) u[cell] += dl;
    double Au = energy(u);
    if (Au < 1e-300) break;  // minimizing curve misses the window entirely
    double su = 1.0 / std::sqrt(Au);
    for (int i = 0; i < n; ++i) cum[i] += u[i] * su;
    double An = energy(cum);
    if (An < 1e-300) break;
    double sn = 1.0 / std::sqrt(An);
    for (int i = 0; i < n; ++i) rho[i] = cum[i] * sn;
  }
  return best;
}

void write_moduli_csv(const std::string& path,
                      const std::vector<ModuliCheckRow>& rows) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path);
  std::fprintf(fp, "check,params,lhs,rhs,slack,pass\n");
  for (const ModuliCheckRow& r : rows) {
    std::fprintf(fp, "%s,%s,%.12g,%.12g,%.12g,%s\n", r.check.c_str(),
                 r.params.c_str(), r.lhs, r.rhs, r.slack, r.pass ? "1" : "0");
  }
  std::fclose(fp);
}

ModuliCheckRow separation_bound_check(const AnnulusSpec& B, cplx a1, cplx b1,
                                      SpherePoint a2, SpherePoint b2,
                                      const ExtremalLengthOptions& opt) {
  auto inner_side = [&](cplx p) {
    if (B.round) return std::abs(p - B.center) <= B.r;
    return point_in_polygon(B.inner, p);
  };
  auto outer_side = [&](const SpherePoint& p) {
    if (p.inf) return true;
    if (B.round) return std::abs(p.z - B.center) >= B.R;
    return !point_in_polygon(B.outer, p.z);
  };
  if (!inner_side(a1) || !inner_side(b1) || !outer_side(a2) || !outer_side(b2))
    throw std::invalid_argument("ring domain does not separate the pairs");

  double alpha = std::min(chordal_distance(a1, b1),
                          chordal_distance(a2, b2));
  ModuliCheckRow row;
  row.check = "separation-bound";
  char buf[160];
  std::snprintf(buf, sizeof buf, "alpha=%.6g", alpha);
  row.params = buf;
  row.lhs = annulus_modulus(B, opt);
  row.rhs = kPi * kPi / (2.0 * alpha * alpha);
  row.slack = row.rhs - row.lhs;
  row.pass = row.lhs <= row.rhs;
  return row;
}

ModuliCheckRow superadditivity_check(const AnnulusSpec& A,
                                     const std::vector<AnnulusSpec>& parts,
                                     double slack,
                                     const ExtremalLengthOptions& opt) {
  if (A.round) {
    // Disjointness is checked on the radial intervals for concentric parts.
    std::vector<std::pair<double, double>> spans;
    for (const AnnulusSpec& p : parts) {
      if (p.round && std::abs(p.center - A.center) < 1e-12) {
        if (p.r < A.r - 1e-12 || p.R > A.R + 1e-12)
          throw std::invalid_argument("part leaves the ambient annulus");
        spans.push_back({p.r, p.R});
      }
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
      if (spans[i].first < spans[i - 1].second - 1e-12)
        throw std::invalid_argument("parts overlap");
  }
  ModuliCheckRow row;
  row.check = "superadditivity";
  char buf[64];
  std::snprintf(buf, sizeof buf, "parts=%zu", parts.size());
  row.params = buf;
  row.lhs = 0.0;
  for (const AnnulusSpec& p : parts) row.lhs += annulus_modulus(p, opt);
  row.rhs = annulus_modulus(A, opt);
  row.slack = slack;
  row.pass = row.lhs <= row.rhs + slack * (1.0 + std::abs(row.rhs));
  return row;
}

ModuliCheckRow distance_modulus_bound(cplx z, cplx w,
                                      const ExtremalLengthOptions& opt) {
  if (!(std::abs(z - w) < std::abs(w)))
    throw std::invalid_argument("need |z - w| < |w|");
  cplx m = 0.5 * (z + w);
  double sep = 0.5 * std::abs(z - w);
  double span = 3.0 * (std::abs(m) + 2.0 * sep);
  Lattice lat = make_lattice(m.real() - span, m.imag() - span, 2.0 * span,
                             2.0 * span, opt.resolution);
  const double h = lat.h;
  cplx dir = std::abs(m) > 1e-12 ? m / std::abs(m) : cplx(1.0, 0.0);
  for (int r = 0; r < lat.rows; ++r) {
    for (int c = 0; c < lat.cols; ++c) {
      cplx p = lat.center(r, c);
      if (dist_to_segment(p, z, w) < sep + 1.5 * h) continue;  // the pair hole
      if (std::abs(p) < 1.5 * h) continue;                     // the origin
      int i = lat.idx(r, c);
      lat.free_[i] = 1;
      cplx d = (p - m) * std::conj(dir);
      if (d.real() <= sep) continue;
      if (std::abs(d.imag()) < 0.55 * h) {
        lat.free_[i] = 0;
      } else if (d.imag() <= -0.55 * h && d.imag() > -1.7 * h) {
        lat.term_a[i] = 1;
      } else if (d.imag() >= 0.55 * h && d.imag() < 1.7 * h) {
        lat.term_b[i] = 1;
      }
    }
  }
  double lambda = lattice_extremal_length(lat, opt);
  ModuliCheckRow row;
  row.check = "distance-modulus";
  char buf[200];
  std::snprintf(buf, sizeof buf, "z=%.6g%+.6gi;w=%.6g%+.6gi;EL=%.6g", z.real(),
                z.imag(), w.real(), w.imag(), lambda);
  row.params = buf;
  row.lhs = std::abs(z - w);
  row.rhs = lambda > 1e-12 ? std::abs(w) * std::exp(-2.0 * kPi / lambda) : 0.0;
  row.slack = row.lhs - row.rhs;
  row.pass = row.lhs > row.rhs;
  return row;
}

EquicontinuityReport equicontinuity_probe(const std::function<cplx(cplx)>& h,
                                          const std::vector<AnnulusSpec>& annuli,
                                          double bound, int boundary_samples,
                                          const ExtremalLengthOptions& opt) {
  EquicontinuityReport rep;
  rep.bound = bound;
  rep.pass = true;
  for (const AnnulusSpec& a : annuli) {
    if (!a.round) throw std::invalid_argument("round source annuli required");
    Polyline in_img, out_img;
    in_img.closed = out_img.closed = true;
    for (int k = 0; k < boundary_samples; ++k) {
      double th = 2.0 * kPi * k / boundary_samples;
      cplx e = std::polar(1.0, th);
      in_img.pts.push_back(h(a.center + a.r * e));
      out_img.pts.push_back(h(a.center + a.R * e));
    }
    double mod = annulus_modulus(AnnulusSpec::polygonal(out_img, in_img), opt);
    rep.moduli.push_back(mod);
    if (!(mod >= bound)) rep.pass = false;
  }
  return rep;
}

}  // namespace pinch
