#include "pinch/lamination.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "pinch/parallel.hpp"

namespace pinch {

cplx KoenigsChart::forward(cplx z, bool& ok) const {
  ok = true;
  cplx w = z;
  for (int k = 0; k < n_K; ++k) {
    bool sat = false;
    w = map.eval(w, sat);
    if (sat || !std::isfinite(std::abs(w))) {
      ok = false;
      return w;
    }
  }
  return std::pow(a, -n_K) * (w - p_star);
}

cplx KoenigsChart::forward_deriv(cplx z, bool& ok) const {
  ok = true;
  cplx w = z;
  cplx prod = 1.0;
  for (int k = 0; k < n_K; ++k) {
    bool sat = false;
    prod *= map.deriv(w, sat);
    if (sat) {
      ok = false;
      return prod;
    }
    bool sat2 = false;
    w = map.eval(w, sat2);
    if (sat2 || !std::isfinite(std::abs(w))) {
      ok = false;
      return prod;
    }
  }
  return std::pow(a, -n_K) * prod;
}

std::optional<cplx> KoenigsChart::inverse(cplx zeta, cplx seed, int iters,
                                          double tol) const {
  cplx z = seed;
  double scale = tol * (1.0 + std::abs(zeta));
  for (int it = 0; it < iters; ++it) {
    bool ok = false;
    cplx g = forward(z, ok) - zeta;
    if (!ok) return std::nullopt;
    if (std::abs(g) < scale) return z;
    bool ok2 = false;
    cplx dg = forward_deriv(z, ok2);
    if (!ok2 || std::abs(dg) < 1e-300) return std::nullopt;
    z -= g / dg;
    if (!std::isfinite(std::abs(z))) return std::nullopt;
  }
  bool ok = false;
  if (std::abs(forward(z, ok) - zeta) < scale && ok) return z;
  return std::nullopt;
}

cplx KoenigsChart::to_halfplane(cplx z, bool& ok) const {
  return cplx(0.0, -1.0) * forward(z, ok);
}

std::optional<cplx> KoenigsChart::from_halfplane(cplx w, cplx seed, int iters,
                                                 double tol) const {
  return inverse(cplx(0.0, 1.0) * w, seed, iters, tol);
}

double KoenigsChart::conjugacy_residual(cplx probe) const {
  bool ok1 = false, ok2 = false, sat = false;
  cplx fz = map.eval(probe, sat);
  if (sat) return 1e300;
  cplx lhs = forward(fz, ok1);
  cplx phi = forward(probe, ok2);
  if (!ok1 || !ok2) return 1e300;
  return std::abs(lhs - a * phi) / (1.0 + std::abs(phi));
}

KoenigsChart build_koenigs(const EntireMap& f, cplx p_star, double a, int n_K,
                           std::vector<cplx> probes, double tol) {
  if (!(a > 1.0)) throw std::invalid_argument("chart multiplier must exceed 1");
  KoenigsChart chart;
  chart.map = f;
  chart.p_star = p_star;
  chart.a = a;
  chart.n_K = n_K;
  if (probes.empty()) {
    probes = {p_star - 9.0, p_star - 6.0 + cplx(0.0, 1.5),
              p_star - 6.0 - cplx(0.0, 1.5)};
  }
  for (const cplx& p : probes) {
    double res = chart.conjugacy_residual(p);
    if (!(res < tol)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "chart rejected: conjugacy residual %.3g at probe (%.6g, %.6g)",
                    res, p.real(), p.imag());
      throw std::runtime_error(buf);
    }
  }
  return chart;
}

void Leaf::compute_diams() {
  std::vector<SpherePoint> sp;
  sp.reserve(pts.size() + 2);
  for (const cplx& z : pts) sp.push_back(SpherePoint::finite(z));
  sp.push_back(end_a);
  sp.push_back(end_b);
  diam_spherical = spherical_diameter(sp);
  diam_euclid = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      diam_euclid = std::max(diam_euclid, std::abs(pts[i] - pts[j]));
}

namespace {

double leaf_pair_min_dist(const Leaf& a, const Leaf& b) {
  double d = 1e300;
  for (const cplx& p : a.pts)
    for (const cplx& q : b.pts) d = std::min(d, std::abs(p - q));
  return d;
}

double leaf_pair_hausdorff(const Leaf& a, const Leaf& b) {
  auto directed = [](const Leaf& x, const Leaf& y) {
    double h = 0.0;
    for (const cplx& p : x.pts) {
      double d = 1e300;
      for (const cplx& q : y.pts) d = std::min(d, std::abs(p - q));
      h = std::max(h, d);
    }
    return h;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace

Lamination build_fundamental_lamination(
    const KoenigsChart& chart,
    const std::vector<std::pair<SpherePoint, SpherePoint>>& anchors,
    const LaminationBuildOptions& opt) {
  Lamination lam;
  lam.thickness = opt.thickness;
  for (const auto& [u, v] : anchors) {
    auto h_coord = [&](const SpherePoint& p) -> SpherePoint {
      if (p.inf) return SpherePoint::infinity();
      bool ok = false;
      cplx w = chart.to_halfplane(p.z, ok);
      if (!ok) throw std::invalid_argument("anchor cannot be charted");
      return SpherePoint::finite(cplx(w.real(), 0.0));
    };
    SpherePoint hu = h_coord(u), hv = h_coord(v);
    HalfPlaneGeodesic g = geodesic_between(hu, hv);

    // Side bookkeeping: sample(0) approaches the first endpoint (the smaller
    // real one, or the finite one when infinity is involved).
    SpherePoint side0 = u, side1 = v;
    if (u.inf) std::swap(side0, side1);
    if (!u.inf && !v.inf && hu.z.real() > hv.z.real()) std::swap(side0, side1);

    int n = std::max(opt.samples_per_leaf, 9);
    std::vector<cplx> hpts(n);
    for (int j = 0; j < n; ++j) {
      double t = opt.endpoint_margin +
                 (1.0 - 2.0 * opt.endpoint_margin) * j / (n - 1.0);
      hpts[j] = g.sample(t);
    }

    // Continuation from the apex outward keeps Newton on the right branch.
    std::vector<std::optional<cplx>> sol(n);
    int mid = n / 2;
    sol[mid] = chart.from_halfplane(hpts[mid], chart.p_star + cplx(0.0, 1.0) * hpts[mid],
                                    80, opt.newton_tol);
    if (!sol[mid]) continue;
    for (int j = mid + 1; j < n; ++j) {
      if (!sol[j - 1]) break;
      sol[j] = chart.from_halfplane(hpts[j], *sol[j - 1], 60, opt.newton_tol);
    }
    for (int j = mid - 1; j >= 0; --j) {
      if (!sol[j + 1]) break;
      sol[j] = chart.from_halfplane(hpts[j], *sol[j + 1], 60, opt.newton_tol);
    }
    int lo = mid, hi = mid;
    while (lo > 0 && sol[lo - 1]) --lo;
    while (hi + 1 < n && sol[hi + 1]) ++hi;

    Leaf leaf;
    for (int j = lo; j <= hi; ++j) leaf.pts.push_back(*sol[j]);
    leaf.end_a = side0;
    leaf.end_b = side1;
    leaf.depth = 0;
    leaf.parent = -1;
    leaf.to_infinity = u.inf || v.inf;
    leaf.compute_diams();
    lam.leaves.push_back(std::move(leaf));
  }

  for (std::size_t i = 0; i < lam.leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < lam.leaves.size(); ++j) {
      if (leaf_pair_min_dist(lam.leaves[i], lam.leaves[j]) < 1e-6)
        throw std::runtime_error("fundamental leaves intersect at sample resolution");
    }
  }
  return lam;
}

GrandOrbit grand_orbit_expand(const EntireMap& f, const Lamination& lam,
                              const GrandOrbitOptions& opt) {
  GrandOrbit go;
  go.K_max = opt.K_max;
  go.leaves = lam.leaves;
  go.max_diam_by_depth.assign(static_cast<std::size_t>(opt.K_max) + 1, 0.0);
  for (const Leaf& l : go.leaves)
    go.max_diam_by_depth[0] = std::max(go.max_diam_by_depth[0], l.diam_spherical);

  std::vector<int> level(go.leaves.size());
  std::iota(level.begin(), level.end(), 0);

  InverseOptions branch_opt;
  branch_opt.translate_range = opt.translate_range;
  branch_opt.tol = 1e-11;
  InverseOptions follow_opt;
  follow_opt.tol = 1e-11;

  int dropped = 0;
  for (int depth = 1; depth <= opt.K_max; ++depth) {
    std::vector<std::vector<Leaf>> produced(level.size());
    std::vector<int> drops(level.size(), 0);
    parallel_for(static_cast<int>(level.size()), opt.threads, [&](int li) {
      const Leaf& src = go.leaves[level[li]];
      if (src.pts.size() < 2) return;
      cplx v0 = src.pts.front();
      std::vector<cplx> branches = inverse_images(f, v0, {v0}, branch_opt);
      for (std::size_t bi = 0; bi < branches.size(); ++bi) {
        Leaf nl;
        nl.depth = depth;
        nl.parent = level[li];
        nl.branch = static_cast<int>(bi);
        nl.pts.push_back(branches[bi]);
        bool ok = true;
        for (std::size_t vj = 1; vj < src.pts.size(); ++vj) {
          std::vector<cplx> cands =
              inverse_images(f, src.pts[vj], {nl.pts.back()}, follow_opt);
          if (cands.empty()) {
            ok = false;
            break;
          }
          cplx best = cands[0];
          for (const cplx& c : cands)
            if (std::abs(c - nl.pts.back()) < std::abs(best - nl.pts.back()))
              best = c;
          if (std::abs(best - nl.pts.back()) > opt.continuity_tol) {
            ok = false;
            break;
          }
          nl.pts.push_back(best);
        }
        if (!ok) {
          ++drops[li];
          continue;
        }

        // Clip to the window: keep the longest contiguous inside run.
        int best_lo = -1, best_len = 0, run_lo = -1;
        for (int j = 0; j <= static_cast<int>(nl.pts.size()); ++j) {
          bool inside = j < static_cast<int>(nl.pts.size()) &&
                        opt.window.contains_with_margin(nl.pts[j], 1.15);
          if (inside && run_lo < 0) run_lo = j;
          if (!inside && run_lo >= 0) {
            if (j - run_lo > best_len) {
              best_len = j - run_lo;
              best_lo = run_lo;
            }
            run_lo = -1;
          }
        }
        if (best_len < 2) continue;  // entirely outside the window
        if (best_len < static_cast<int>(nl.pts.size())) {
          nl.truncated = true;
          nl.pts = std::vector<cplx>(nl.pts.begin() + best_lo,
                                     nl.pts.begin() + best_lo + best_len);
        }

        auto pull_end = [&](const SpherePoint& e, cplx near_vertex) -> SpherePoint {
          if (e.inf) return SpherePoint::infinity();
          std::vector<cplx> cands = inverse_images(f, e.z, {near_vertex}, follow_opt);
          if (cands.empty()) return SpherePoint::finite(near_vertex);
          cplx best = cands[0];
          for (const cplx& c : cands)
            if (std::abs(c - near_vertex) < std::abs(best - near_vertex)) best = c;
          return SpherePoint::finite(best);
        };
        if (!nl.truncated) {
          nl.end_a = pull_end(src.end_a, nl.pts.front());
          nl.end_b = pull_end(src.end_b, nl.pts.back());
        } else {
          nl.end_a = SpherePoint::finite(nl.pts.front());
          nl.end_b = SpherePoint::finite(nl.pts.back());
        }
        nl.to_infinity = nl.end_a.inf || nl.end_b.inf;
        nl.compute_diams();
        produced[li].push_back(std::move(nl));
      }
    });

    std::vector<int> next_level;
    for (std::size_t li = 0; li < produced.size(); ++li) {
      dropped += drops[li];
      for (Leaf& nl : produced[li]) {
        if (static_cast<int>(go.leaves.size()) >= opt.max_leaves) break;
        go.max_diam_by_depth[depth] =
            std::max(go.max_diam_by_depth[depth], nl.diam_spherical);
        next_level.push_back(static_cast<int>(go.leaves.size()));
        go.leaves.push_back(std::move(nl));
      }
    }
    level = std::move(next_level);
    if (level.empty()) break;
  }
  go.dropped = dropped;
  return go;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  int add() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {  // false if already connected
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

LaminationReport validate_lamination(const GrandOrbit& go, double min_gap,
                                     double endpoint_merge_tol) {
  LaminationReport rep;
  std::vector<const Leaf*> depth0;
  for (const Leaf& l : go.leaves) {
    if (l.depth == 0) depth0.push_back(&l);
    if (l.to_infinity) ++rep.lambda_inf_count;
    if (l.truncated) ++rep.truncated_leaves;
  }
  rep.dropped_leaves = go.dropped;

  rep.min_leaf_gap = 1e300;
  rep.min_hausdorff = 1e300;
  for (std::size_t i = 0; i < depth0.size(); ++i) {
    for (std::size_t j = i + 1; j < depth0.size(); ++j) {
      rep.min_leaf_gap =
          std::min(rep.min_leaf_gap, leaf_pair_min_dist(*depth0[i], *depth0[j]));
      rep.min_hausdorff =
          std::min(rep.min_hausdorff, leaf_pair_hausdorff(*depth0[i], *depth0[j]));
    }
  }
  if (depth0.size() < 2) {
    rep.min_leaf_gap = 0.0;
    rep.min_hausdorff = 0.0;
    rep.accumulation = false;
  } else {
    rep.accumulation = rep.min_leaf_gap < min_gap;
  }

  // Endpoint graph: leaves are edges, merged endpoints are nodes; a repeated
  // connection is a closed curve in the closure.
  UnionFind uf;
  int inf_node = -1;
  std::vector<cplx> reps;
  std::vector<int> rep_node;
  auto node_of = [&](const SpherePoint& e) -> int {
    if (e.inf) {
      if (inf_node < 0) inf_node = uf.add();
      return inf_node;
    }
    for (std::size_t i = 0; i < reps.size(); ++i)
      if (std::abs(reps[i] - e.z) < endpoint_merge_tol) return rep_node[i];
    reps.push_back(e.z);
    rep_node.push_back(uf.add());
    return rep_node.back();
  };
  rep.closed_curve = false;
  for (const Leaf& l : go.leaves) {
    int na = node_of(l.end_a);
    int nb = node_of(l.end_b);
    if (na == nb || !uf.unite(na, nb)) rep.closed_curve = true;
  }
  rep.property_p = !rep.closed_curve && rep.lambda_inf_count == 0;
  return rep;
}

void write_lamination_json(const std::string& path, const GrandOrbit& go) {
  nlohmann::json j;
  j["schema"] = "baker-lamination/1";
  j["k_max"] = go.K_max;
  j["dropped"] = go.dropped;
  j["max_diam_by_depth"] = go.max_diam_by_depth;
  nlohmann::json arr = nlohmann::json::array();
  for (const Leaf& l : go.leaves) {
    nlohmann::json jl;
    jl["depth"] = l.depth;
    jl["parent"] = l.parent;
    jl["branch"] = l.branch;
    jl["to_infinity"] = l.to_infinity;
    jl["truncated"] = l.truncated;
    jl["diam_spherical"] = l.diam_spherical;
    jl["diam_euclid"] = l.diam_euclid;
    auto end_json = [](const SpherePoint& e) {
      nlohmann::json je;
      je["inf"] = e.inf;
      je["re"] = e.inf ? 0.0 : e.z.real();
      je["im"] = e.inf ? 0.0 : e.z.imag();
      return je;
    };
    jl["end_a"] = end_json(l.end_a);
    jl["end_b"] = end_json(l.end_b);
    nlohmann::json pts = nlohmann::json::array();
    for (const cplx& p : l.pts) pts.push_back({p.real(), p.imag()});
    jl["pts"] = std::move(pts);
    arr.push_back(std::move(jl));
  }
  j["leaves"] = std::move(arr);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(1) << "\n";
}

GrandOrbit read_lamination_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("schema", "") != std::string("baker-lamination/1"))
    throw std::runtime_error("unrecognized lamination schema in " + path);
  GrandOrbit go;
  go.K_max = j.at("k_max").get<int>();
  go.dropped = j.at("dropped").get<int>();
  go.max_diam_by_depth = j.at("max_diam_by_depth").get<std::vector<double>>();
  for (const auto& jl : j.at("leaves")) {
    Leaf l;
    l.depth = jl.at("depth").get<int>();
    l.parent = jl.at("parent").get<int>();
    l.branch = jl.at("branch").get<int>();
    l.to_infinity = jl.at("to_infinity").get<bool>();
    l.truncated = jl.at("truncated").get<bool>();
    l.diam_spherical = jl.at("diam_spherical").get<double>();
    l.diam_euclid = jl.at("diam_euclid").get<double>();
    auto end_from = [](const nlohmann::json& je) {
      if (je.at("inf").get<bool>()) return SpherePoint::infinity();
      return SpherePoint::finite(
          cplx(je.at("re").get<double>(), je.at("im").get<double>()));
    };
    l.end_a = end_from(jl.at("end_a"));
    l.end_b = end_from(jl.at("end_b"));
    for (const auto& jp : jl.at("pts"))
      l.pts.emplace_back(jp.at(0).get<double>(), jp.at(1).get<double>());
    go.leaves.push_back(std::move(l));
  }
  return go;
}

}  // namespace pinch
