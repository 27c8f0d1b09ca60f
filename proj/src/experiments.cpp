#include "pinch/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "pinch/moduli.hpp"

namespace pinch {

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::runtime_error("unknown key '" + it.key() + "' in " + where);
  }
}

cplx get_cplx(const json& v, const char* where) {
  if (!v.is_array() || v.size() != 2)
    throw std::runtime_error(std::string(where) + " must be [re, im]");
  return {v[0].get<double>(), v[1].get<double>()};
}

SpherePoint get_sphere(const json& v, const char* where) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return SpherePoint::infinity();
    throw std::runtime_error(std::string(where) + ": only \"inf\" or [re, im]");
  }
  return SpherePoint::finite(get_cplx(v, where));
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json sphere_json(const SpherePoint& p) {
  if (p.inf) return json("inf");
  return cplx_json(p.z);
}

EntireMap resolve_map(const RunConfig& cfg) {
  if (!cfg.expr_text.empty())
    return make_entire_map(cfg.function.empty() ? "custom" : cfg.function,
                           cfg.expr_text);
  return catalog(cfg.function);
}

std::string frame_name(const char* stem, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02d%s", stem, i, ext);
  return buf;
}

std::optional<cplx> newton_preimage(const EntireMap& f, cplx target, cplx seed) {
  cplx z = seed;
  for (int i = 0; i < 60; ++i) {
    bool s1 = false, s2 = false;
    cplx val = f.eval(z, s1);
    cplx d = f.cdf.eval(z, s2);
    if (s1 || s2 || std::abs(d) < 1e-14) return std::nullopt;
    cplx step = (val - target) / d;
    z -= step;
    if (std::abs(step) < 1e-12 * (1.0 + std::abs(z))) break;
  }
  if (std::abs(f.eval(z) - target) < 1e-9 * (1.0 + std::abs(target))) return z;
  return std::nullopt;
}

bool lex_less(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

// Coarse grid scan for distinct Newton basins of f(z) = w0.
std::vector<cplx> scan_preimages(const EntireMap& f, cplx w0, const Window& w,
                                 int max_roots) {
  std::vector<cplx> roots;
  const int n = 72;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      cplx z(w.left() + (c + 0.5) * 2.0 * w.half_width / n,
             w.bottom() + (r + 0.5) * 2.0 * w.half_height / n);
      bool sat = false;
      cplx val = f.eval(z, sat);
      if (sat || std::abs(val - w0) > 4.0) continue;
      auto root = newton_preimage(f, w0, z);
      if (!root || !w.contains(*root)) continue;
      bool dup = false;
      for (cplx q : roots)
        if (std::abs(q - *root) < 1e-6 * (1.0 + std::abs(q))) {
          dup = true;
          break;
        }
      if (!dup) roots.push_back(*root);
    }
  }
  std::sort(roots.begin(), roots.end(), lex_less);
  if (static_cast<int>(roots.size()) > max_roots) roots.resize(max_roots);
  return roots;
}

struct TrackedCurve {
  int branch = 0;  // 2*pi*branch seed height at depth 1, scan ordinal deeper
  int depth = 1;
  std::vector<cplx> pts;
  bool truncated = false;  // left the window, so the true curve continues to infinity
};

// Newton continuation of one inverse branch along `targets`.
std::optional<TrackedCurve> pullback_curve(const EntireMap& f,
                                           const std::vector<cplx>& targets,
                                           cplx seed0, const Window& w) {
  TrackedCurve out;
  cplx seed = seed0;
  for (cplx target : targets) {
    auto z = newton_preimage(f, target, seed);
    if (!z) break;
    if (!out.pts.empty() && std::abs(*z - out.pts.back()) > 1.5) break;
    out.pts.push_back(*z);
    seed = *z;
    if (!w.contains(*z)) {
      out.truncated = true;
      break;
    }
  }
  if (out.pts.size() < 8) return std::nullopt;
  return out;
}

std::vector<TrackedCurve> track_gamma_curves(const EntireMap& f,
                                             const std::vector<cplx>& leaf_pts,
                                             const std::vector<int>& heights,
                                             int depth, const Window& w) {
  std::vector<cplx> targets;
  for (size_t i = 0; i < leaf_pts.size(); i += 4) targets.push_back(leaf_pts[i]);
  if (targets.size() < 8) targets = leaf_pts;

  std::vector<TrackedCurve> curves;
  for (int k : heights) {
    // Branch row scan: the left end of the branch-k preimage curve sits near
    // height 2*pi*k; pick the best seed along that row.
    double best = 1e300;
    cplx seed(0.0, 2.0 * kPi * k);
    for (double x = -1.0; x < w.right() - 0.3; x += 0.1) {
      cplx z(x, 2.0 * kPi * k);
      bool sat = false;
      cplx val = f.eval(z, sat);
      if (sat) continue;
      double d = std::abs(val - targets.front());
      if (d < best) {
        best = d;
        seed = z;
      }
    }
    auto cur = pullback_curve(f, targets, seed, w);
    if (cur) {
      cur->branch = k;
      cur->depth = 1;
      curves.push_back(std::move(*cur));
    }
  }

  std::vector<TrackedCurve> frontier = curves;
  for (int d = 2; d <= depth; ++d) {
    std::vector<TrackedCurve> next;
    for (const TrackedCurve& parent : frontier) {
      std::vector<cplx> roots = scan_preimages(f, parent.pts.front(), w, 4);
      int ordinal = 0;
      for (cplx r : roots) {
        auto cur = pullback_curve(f, parent.pts, r, w);
        if (!cur) continue;
        cur->branch = ordinal++;
        cur->depth = d;
        next.push_back(std::move(*cur));
        if (curves.size() + next.size() >= 24) break;
      }
      if (curves.size() + next.size() >= 24) break;
    }
    curves.insert(curves.end(), next.begin(), next.end());
    frontier = std::move(next);
    if (curves.size() >= 24) break;
  }
  return curves;
}

// Deterministic probe placement: first candidates with clearance from every
// tracked curve vertex.
std::vector<ProbeDisc> pick_probes(
    const std::vector<const std::vector<cplx>*>& curves, const Window& w,
    int want) {
  const double radius = 0.4, clearance = 0.75;
  static const cplx candidates[] = {
      {-5.5, 0.0}, {2.5, 3.1}, {2.5, -3.1},  {4.5, 1.5},
      {-5.5, 3.0}, {0.5, -1.5}, {-3.0, -3.2}, {6.0, 4.5}};
  std::vector<ProbeDisc> out;
  for (cplx c : candidates) {
    if (static_cast<int>(out.size()) >= want) break;
    if (!w.contains_with_margin(c, 0.15)) continue;
    double dmin = 1e300;
    for (const auto* pts : curves)
      for (cplx p : *pts) dmin = std::min(dmin, std::abs(p - c));
    if (dmin > radius + clearance) out.push_back({c, radius, 64});
  }
  return out;
}

struct Audit {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

void write_audits_csv(const std::string& path, const std::vector<Audit>& audits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "audit,value,threshold,pass\n";
  char buf[160];
  for (const Audit& a : audits) {
    std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%d\n", a.name.c_str(),
                  a.value, a.threshold, a.pass ? 1 : 0);
    out << buf;
  }
}

std::vector<double> collect(const std::vector<DiagRow>& rows,
                            const std::string& kind, int index) {
  std::vector<double> out;
  for (const DiagRow& r : rows)
    if (r.kind == kind && r.index == index) out.push_back(r.value);
  return out;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return v.size() >= 2;
}

Raster transported_render(const RenderResult& base, const Raster& base_img,
                          const QCMap& qc) {
  const Window& w = base.window;
  Raster out(w.cols, w.rows);
  for (int r = 0; r < w.rows; ++r) {
    for (int c = 0; c < w.cols; ++c) {
      bool ok = false;
      cplx z = qc.invert(pixel_to_point(w, c, r), ok);
      if (!ok) continue;  // stays black
      z = cplx(std::clamp(z.real(), w.left(), w.right()),
               std::clamp(z.imag(), w.bottom(), w.top()));
      auto px = point_to_pixel(w, z);
      if (!px) continue;
      size_t src = (static_cast<size_t>(px->second) * w.cols + px->first) * 3;
      out.set(c, r, base_img.rgb[src], base_img.rgb[src + 1],
              base_img.rgb[src + 2]);
    }
  }
  return out;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  double u = std::ldexp(static_cast<double>(rng() >> 11), -53);
  return lo + u * (hi - lo);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j = json::parse(in);
  check_keys(j, "config",
             {"schema", "function", "expr", "window", "resolution", "budget",
              "seed", "threads", "out_dir", "koenigs", "lamination", "pinch",
              "solver", "probes", "classify", "gamma"});
  if (!j.contains("schema") || j["schema"] != "run-config/1")
    throw std::runtime_error("config schema must be run-config/1");

  RunConfig cfg;
  if (j.contains("function")) cfg.function = j["function"].get<std::string>();
  if (j.contains("expr")) cfg.expr_text = j["expr"].get<std::string>();
  if (j.contains("window")) {
    const json& w = j["window"];
    check_keys(w, "window", {"center", "half_width", "half_height"});
    cfg.window.center = get_cplx(w.at("center"), "window.center");
    cfg.window.half_width = w.at("half_width").get<double>();
    cfg.window.half_height = w.at("half_height").get<double>();
    cfg.window_set = true;
  }
  if (j.contains("resolution")) cfg.resolution = j["resolution"].get<int>();
  if (j.contains("budget")) cfg.budget = j["budget"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("koenigs")) {
    const json& k = j["koenigs"];
    check_keys(k, "koenigs", {"p_star", "a", "n_K"});
    cfg.p_star = get_cplx(k.at("p_star"), "koenigs.p_star");
    if (k.contains("a")) cfg.a = k["a"].get<double>();
    if (k.contains("n_K")) cfg.n_K = k["n_K"].get<int>();
    cfg.koenigs_set = true;
  }
  if (j.contains("lamination")) {
    const json& l = j["lamination"];
    check_keys(l, "lamination",
               {"anchors", "delta", "translate_range", "expect_property_p"});
    if (l.contains("anchors")) {
      for (const json& a : l["anchors"]) {
        if (!a.is_array() || a.size() != 2)
          throw std::runtime_error("each anchor is a pair of endpoints");
        cfg.anchors.push_back(
            {get_sphere(a[0], "anchor"), get_sphere(a[1], "anchor")});
      }
    }
    if (l.contains("delta")) cfg.delta = l["delta"].get<double>();
    if (l.contains("translate_range"))
      cfg.translate_range = l["translate_range"].get<int>();
    if (l.contains("expect_property_p"))
      cfg.expect_property_p = l["expect_property_p"].get<bool>();
  }
  if (j.contains("pinch")) {
    const json& p = j["pinch"];
    check_keys(p, "pinch",
               {"L_b", "L_y", "L_r", "mu_max", "K_max", "support_margin",
                "t_grid"});
    if (p.contains("L_b")) cfg.profile.L_b = p["L_b"].get<double>();
    if (p.contains("L_y")) cfg.profile.L_y = p["L_y"].get<double>();
    if (p.contains("L_r")) cfg.profile.L_r = p["L_r"].get<double>();
    if (p.contains("mu_max")) cfg.profile.mu_max = p["mu_max"].get<double>();
    if (p.contains("K_max")) cfg.K_max = p["K_max"].get<int>();
    if (p.contains("support_margin"))
      cfg.support_margin = p["support_margin"].get<double>();
    if (p.contains("t_grid"))
      cfg.t_grid = p["t_grid"].get<std::vector<double>>();
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, "solver",
               {"resolution", "max_iterations", "tolerance", "p", "q"});
    if (s.contains("resolution"))
      cfg.solver_resolution = s["resolution"].get<int>();
    if (s.contains("max_iterations"))
      cfg.solver_max_iterations = s["max_iterations"].get<int>();
    if (s.contains("tolerance"))
      cfg.solver_tolerance = s["tolerance"].get<double>();
    if (s.contains("p")) cfg.norm_p = get_cplx(s["p"], "solver.p");
    if (s.contains("q")) cfg.norm_q = get_cplx(s["q"], "solver.q");
  }
  if (j.contains("probes")) {
    for (const json& p : j["probes"]) {
      check_keys(p, "probe", {"center", "radius", "samples"});
      ProbeDisc d;
      d.center = get_cplx(p.at("center"), "probe.center");
      if (p.contains("radius")) d.radius = p["radius"].get<double>();
      if (p.contains("samples")) d.samples = p["samples"].get<int>();
      cfg.probes.push_back(d);
    }
  }
  if (j.contains("classify")) {
    for (const json& e : j["classify"]) {
      check_keys(e, "classify entry", {"function", "probe"});
      ClassifyEntry ce;
      ce.function = e.at("function").get<std::string>();
      if (e.contains("probe")) ce.probe = get_cplx(e["probe"], "classify.probe");
      cfg.classify_entries.push_back(ce);
    }
  }
  if (j.contains("gamma")) {
    const json& g = j["gamma"];
    check_keys(g, "gamma", {"heights", "depth"});
    if (g.contains("heights"))
      cfg.gamma_heights = g["heights"].get<std::vector<int>>();
    if (g.contains("depth")) cfg.gamma_depth = g["depth"].get<int>();
  }
  return cfg;
}

void write_manifest(const RunConfig& cfg, const std::string& path) {
  json j;
  j["schema"] = "manifest/1";
  j["function"] = cfg.function;
  j["expr"] = cfg.expr_text;
  j["window"] = {{"center", cplx_json(cfg.window.center)},
                 {"half_width", cfg.window.half_width},
                 {"half_height", cfg.window.half_height}};
  j["resolution"] = cfg.resolution;
  j["budget"] = cfg.budget;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["out_dir"] = cfg.out_dir;
  j["koenigs"] = {{"p_star", cplx_json(cfg.p_star)},
                  {"a", cfg.a},
                  {"n_K", cfg.n_K}};
  json anchors = json::array();
  for (const AnchorPair& a : cfg.anchors)
    anchors.push_back(json::array({sphere_json(a.a), sphere_json(a.b)}));
  j["lamination"] = {
      {"anchors", anchors},
      {"delta", cfg.delta},
      {"translate_range", cfg.translate_range},
      {"expect_property_p",
       cfg.expect_property_p ? json(*cfg.expect_property_p) : json()}};
  j["pinch"] = {{"L_b", cfg.profile.L_b},
                {"L_y", cfg.profile.L_y},
                {"L_r", cfg.profile.L_r},
                {"mu_max", cfg.profile.mu_max},
                {"K_max", cfg.K_max},
                {"support_margin", cfg.support_margin},
                {"t_grid", cfg.t_grid},
                {"t_cap", cfg.profile.t_cap()}};
  j["solver"] = {{"resolution", cfg.solver_resolution},
                 {"max_iterations", cfg.solver_max_iterations},
                 {"tolerance", cfg.solver_tolerance},
                 {"p", cfg.norm_p ? cplx_json(*cfg.norm_p) : json()},
                 {"q", cfg.norm_q ? cplx_json(*cfg.norm_q) : json()}};
  json probes = json::array();
  for (const ProbeDisc& p : cfg.probes)
    probes.push_back({{"center", cplx_json(p.center)},
                      {"radius", p.radius},
                      {"samples", p.samples}});
  j["probes"] = probes;
  json cls = json::array();
  for (const ClassifyEntry& e : cfg.classify_entries)
    cls.push_back({{"function", e.function}, {"probe", cplx_json(e.probe)}});
  j["classify"] = cls;
  j["gamma"] = {{"heights", cfg.gamma_heights}, {"depth", cfg.gamma_depth}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(1) << "\n";
}

std::vector<double> default_t_grid(const PinchProfile& profile) {
  double cap = profile.t_cap();
  std::vector<double> grid;
  for (double t = 0.0; t < cap - 0.05; t += 0.2) grid.push_back(t);
  double t = grid.back();
  while (cap - t > 0.02) {
    t = cap - 0.5 * (cap - t);
    grid.push_back(t);
  }
  grid.push_back(cap);
  return grid;
}

BergweilerBasics bergweiler_basics(const EntireMap& f) {
  BergweilerBasics b;
  b.p_star = std::log(2.0) - 2.0;
  b.a = 2.0;
  cplx z(-0.9, 0.0);
  for (int i = 0; i < 80; ++i) {
    cplx g = f.eval(z) - z;
    cplx dg = f.deriv(z) - 1.0;
    if (std::abs(dg) < 1e-14) break;
    cplx step = g / dg;
    z -= step;
    if (std::abs(step) < 1e-14) break;
  }
  if (std::abs(f.eval(z) - z) > 1e-10)
    throw std::runtime_error("no boundary fixed point near -0.9");
  b.x0 = z;
  return b;
}

int cmd_render(const RunConfig& cfg0) {
  RunConfig cfg = cfg0;
  if (!cfg.window_set) {
    cfg.window.center = 0.0;
    cfg.window.half_width = 8.0;
    cfg.window.half_height = 8.0;
  }
  cfg.window.cols = cfg.window.rows = cfg.resolution;
  EntireMap f = resolve_map(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  write_manifest(cfg, cfg.out_dir + "/manifest.json");

  RenderConfig rc;
  rc.window = cfg.window;
  rc.budget = cfg.budget;
  rc.threads = cfg.threads;
  RenderResult rr = render_dynamical_plane(f, rc);
  write_png(cfg.out_dir + "/render.png", rr.to_raster());

  std::vector<FixedPoint> fps = find_fixed_points(f, cfg.window);
  write_fixed_points_csv(cfg.out_dir + "/fixed_points.csv", f.name, fps);
  return 0;
}

int cmd_classify(const RunConfig& cfg0) {
  RunConfig cfg = cfg0;
  if (cfg.classify_entries.empty()) {
    cfg.classify_entries = {{"bergweiler", {-5.0, 0.0}},
                           {"fatou", {5.0, 0.0}},
                           {"baker-dominguez", {5.0, 0.0}},
                           {"hyp2", {5.0, 0.0}},
                           {"parabolic", {-5.0, 0.0}}};
  }
  std::filesystem::create_directories(cfg.out_dir);
  write_manifest(cfg, cfg.out_dir + "/manifest.json");

  std::ofstream out(cfg.out_dir + "/classify.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open classify.csv");
  out << "name,probe_re,probe_im,type,a_estimate,zeta_re,zeta_im,ratios_used,"
         "backward_steps\n";
  char buf[256];
  for (const ClassifyEntry& e : cfg.classify_entries) {
    EntireMap f = catalog(e.function);
    BakerClassification bc = baker_detect_classify(f, e.probe);
    std::string zr = "inf", zi = "inf";
    if (!bc.zeta.inf) {
      std::snprintf(buf, sizeof buf, "%.12g", bc.zeta.z.real());
      zr = buf;
      std::snprintf(buf, sizeof buf, "%.12g", bc.zeta.z.imag());
      zi = buf;
    }
    std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%s,%.12g,%s,%s,%d,%d\n",
                  e.function.c_str(), e.probe.real(), e.probe.imag(),
                  baker_type_name(bc.type), bc.a_estimate, zr.c_str(),
                  zi.c_str(), bc.ratios_used, bc.backward_steps_taken);
    out << buf;
  }
  return 0;
}

namespace {

// Shared front half of the lamination and pinch commands.
struct PinchSetup {
  EntireMap f;
  KoenigsChart chart;
  cplx x0{0.0, 0.0};
  Lamination lam;
  GrandOrbit go;
  LaminationReport report;
};

PinchSetup build_setup(RunConfig& cfg, bool thma_defaults) {
  PinchSetup s;
  s.f = resolve_map(cfg);
  bool need_basics = !cfg.koenigs_set || cfg.anchors.empty() || !cfg.norm_p ||
                     !cfg.norm_q;
  if (need_basics) {
    BergweilerBasics bb = bergweiler_basics(s.f);
    s.x0 = bb.x0;
    if (!cfg.koenigs_set) {
      cfg.p_star = bb.p_star;
      cfg.a = bb.a;
      cfg.koenigs_set = true;
    }
    if (cfg.anchors.empty()) {
      cplx step(0.0, 2.0 * kPi);
      if (thma_defaults) {
        cfg.anchors = {{SpherePoint::finite(s.x0), SpherePoint::infinity()}};
      } else {
        cfg.anchors = {{SpherePoint::finite(s.x0 + step),
                        SpherePoint::finite(s.x0 + 2.0 * step)},
                       {SpherePoint::finite(s.x0 - step),
                        SpherePoint::finite(s.x0 - 2.0 * step)}};
      }
    }
    if (!cfg.norm_p) cfg.norm_p = s.x0 + cplx(0.0, 2.0 * kPi);
    if (!cfg.norm_q) cfg.norm_q = s.x0 - cplx(0.0, 2.0 * kPi);
  }
  if (!cfg.window_set) {
    cfg.window.center = {-1.0, 0.0};
    cfg.window.half_width = 9.0;
    cfg.window.half_height = 15.5;
    cfg.window_set = true;
  }
  cfg.window.cols = cfg.window.rows = cfg.resolution;
  if (cfg.t_grid.empty()) cfg.t_grid = default_t_grid(cfg.profile);

  s.chart = build_koenigs(s.f, cfg.p_star, cfg.a, cfg.n_K);

  std::vector<std::pair<SpherePoint, SpherePoint>> anchors;
  for (const AnchorPair& a : cfg.anchors) anchors.push_back({a.a, a.b});
  LaminationBuildOptions lopt;
  lopt.thickness = cfg.delta;
  s.lam = build_fundamental_lamination(s.chart, anchors, lopt);

  GrandOrbitOptions gopt;
  gopt.K_max = cfg.K_max;
  gopt.translate_range = cfg.translate_range;
  gopt.window = cfg.window;
  gopt.threads = cfg.threads;
  s.go = grand_orbit_expand(s.f, s.lam, gopt);
  s.report = validate_lamination(s.go);
  return s;
}

json report_json(const LaminationReport& r, const GrandOrbit& go) {
  json j;
  j["min_leaf_gap"] = r.min_leaf_gap;
  j["min_hausdorff"] = r.min_hausdorff;
  j["accumulation"] = r.accumulation;
  j["lambda_inf_count"] = r.lambda_inf_count;
  j["closed_curve"] = r.closed_curve;
  j["property_p"] = r.property_p;
  j["truncated_leaves"] = r.truncated_leaves;
  j["dropped_leaves"] = r.dropped_leaves;
  j["leaf_count"] = go.leaves.size();
  j["max_diam_by_depth"] = go.max_diam_by_depth;
  return j;
}

// One deformation frame: field assembly, solve, dumps, transported render.
struct FrameData {
  double t = 0.0;
  QCMap map;
  double field_max_abs = 0.0;
  double field_support = 0.0;
  int field_overlap = 0;
  int neg_cells = 0;
};

int run_pinch_deformation(RunConfig& cfg, PinchSetup& s, bool thma) {
  std::filesystem::create_directories(cfg.out_dir);
  write_lamination_json(cfg.out_dir + "/lamination.json", s.go);

  std::vector<StripChart> charts =
      make_strip_charts(s.chart, s.lam.leaves, cfg.delta, cfg.profile);

  Window swin = cfg.window;
  swin.cols = swin.rows = cfg.solver_resolution;
  SolverConfig scfg;
  scfg.resolution = cfg.solver_resolution;
  scfg.window = swin;
  scfg.max_iterations = cfg.solver_max_iterations;
  scfg.tolerance = cfg.solver_tolerance;
  scfg.p = *cfg.norm_p;
  scfg.q = *cfg.norm_q;
  FieldOptions fopt;
  fopt.window = swin;
  fopt.K_max = cfg.K_max;
  fopt.support_margin = cfg.support_margin;
  fopt.threads = cfg.threads;

  RenderConfig rc;
  rc.window = cfg.window;
  rc.budget = cfg.budget;
  rc.threads = cfg.threads;
  RenderResult base = render_dynamical_plane(s.f, rc);
  Raster base_img = base.to_raster();

  std::vector<TrackedCurve> gammas;
  if (thma)
    gammas = track_gamma_curves(s.f, s.lam.leaves.at(0).pts, cfg.gamma_heights,
                                cfg.gamma_depth, cfg.window);

  std::vector<const std::vector<cplx>*> curve_pts;
  for (const Leaf& l : s.go.leaves) curve_pts.push_back(&l.pts);
  for (const TrackedCurve& g : gammas) curve_pts.push_back(&g.pts);
  if (cfg.probes.empty()) cfg.probes = pick_probes(curve_pts, cfg.window, 2);
  write_manifest(cfg, cfg.out_dir + "/manifest.json");

  const size_t nt = cfg.t_grid.size();
  std::vector<FrameData> frames(nt);
  for (size_t i = 0; i < nt; ++i) {
    double t = cfg.t_grid[i];
    BeltramiField field = assemble_sigma_t(s.f, s.go, charts, cfg.profile, t, fopt);
    frames[i].t = t;
    frames[i].field_max_abs = field.max_abs;
    frames[i].field_support = field.support_fraction;
    frames[i].field_overlap = field.overlap_count;
    frames[i].map = solve_beltrami(field, scfg);
    frames[i].neg_cells = frames[i].map.negative_cells();
    if (i + 1 == nt)
      write_field_dump(cfg.out_dir + "/field_final", field, t, cfg.K_max);
    write_qcmap_dump(cfg.out_dir + "/" + frame_name("qcmap", static_cast<int>(i), ""),
                     frames[i].map, t);
    write_png(cfg.out_dir + "/" + frame_name("render", static_cast<int>(i), ".png"),
              i == 0 ? base_img : transported_render(base, base_img, frames[i].map));
  }

  std::vector<DeformationFrame> dframes;
  for (FrameData& fr : frames)
    dframes.push_back({fr.t, &fr.map, fr.field_max_abs});
  std::vector<int> tracked;
  for (size_t li = 0; li < s.go.leaves.size() && li < 8; ++li)
    tracked.push_back(static_cast<int>(li));
  std::vector<DiagRow> rows =
      deformation_diagnostics(dframes, s.go, tracked, cfg.probes);

  // Postsingular samples against the deforming fundamental region: the two
  // depth-0 leaves plus the boundary arc joining their inner endpoints.
  PostsingularSample ps = postsingular_sample(s.f, 8);
  std::vector<cplx> region = s.lam.leaves.at(0).pts;
  if (!thma && s.lam.leaves.size() > 1) {
    const Leaf& l1 = s.lam.leaves[1];
    region.insert(region.end(), l1.pts.begin(), l1.pts.end());
    const AnchorPair& a0 = cfg.anchors.at(0);
    const AnchorPair& a1 = cfg.anchors.at(1);
    if (!a0.a.inf && !a1.a.inf) {
      for (int k = 0; k <= 80; ++k)
        region.push_back(a0.a.z + (a1.a.z - a0.a.z) * (k / 80.0));
    }
  }
  for (size_t i = 0; i < nt; ++i) {
    const QCMap& qc = frames[i].map;
    double t = frames[i].t;
    if (!thma) {
      double dist = 1e300;
      for (size_t pi = 0; pi < ps.pts.size(); ++pi) {
        if (!cfg.window.contains(ps.pts[pi])) continue;
        cplx hp = qc.evaluate(ps.pts[pi]);
        for (cplx rp : region) dist = std::min(dist, std::abs(hp - qc.evaluate(rp)));
      }
      rows.push_back({t, "postsingular_dist", 0, dist});
    } else {
      double gmax = 0.0;
      for (size_t gi = 0; gi < gammas.size(); ++gi) {
        std::vector<SpherePoint> img;
        for (cplx p : gammas[gi].pts)
          img.push_back(SpherePoint::finite(qc.evaluate(p)));
        if (gammas[gi].truncated) img.push_back(SpherePoint::infinity());
        double d = spherical_diameter(img);
        rows.push_back({t, "gamma_diam_s", static_cast<int>(gi), d});
        gmax = std::max(gmax, d);
      }
      rows.push_back({t, "gamma_max_diam", 0, gmax});
      cplx hx0 = qc.evaluate(s.lam.leaves.at(0).pts.front());
      rows.push_back({t, "x0_to_inf_ds", 0,
                      chordal_distance(SpherePoint::finite(hx0),
                                       SpherePoint::infinity())});
    }
    rows.push_back({t, "field_support", 0, frames[i].field_support});
    rows.push_back({t, "field_overlap", 0, double(frames[i].field_overlap)});
    rows.push_back({t, "field_max_abs", 0, frames[i].field_max_abs});
    rows.push_back({t, "neg_cells", 0, double(frames[i].neg_cells)});
  }
  write_diagnostics_csv(cfg.out_dir + "/diagnostics.csv", rows);

  json rep = report_json(s.report, s.go);
  rep["t_max"] = cfg.t_grid.back();
  rep["gamma_curves"] = json::array();
  for (const TrackedCurve& g : gammas)
    rep["gamma_curves"].push_back({{"branch", g.branch},
                                   {"depth", g.depth},
                                   {"points", g.pts.size()},
                                   {"truncated", g.truncated}});
  {
    std::ofstream out(cfg.out_dir + "/report.json", std::ios::binary);
    out << rep.dump(1) << "\n";
  }

  std::vector<Audit> audits;
  int neg_total = 0;
  for (const FrameData& fr : frames) neg_total += fr.neg_cells;
  audits.push_back({"negative_cells", double(neg_total), 0.0, neg_total == 0});

  int n_audit_leaves = thma ? 1 : 2;
  for (int li = 0; li < n_audit_leaves; ++li) {
    std::vector<double> d = collect(rows, "leaf_diam_s", li);
    char name[64];
    std::snprintf(name, sizeof name, "leaf%d_strictly_decreasing", li);
    audits.push_back({name, d.empty() ? 0.0 : d.back(), 0.0,
                      strictly_decreasing(d)});
    if (!thma) {
      std::snprintf(name, sizeof name, "leaf%d_final_ratio", li);
      double ratio = d.empty() || d.front() == 0.0 ? 1.0 : d.back() / d.front();
      audits.push_back({name, ratio, 0.2, ratio <= 0.2});
    }
  }
  if (thma) {
    audits.push_back({"lambda_inf_present", double(s.report.lambda_inf_count),
                      1.0, s.report.lambda_inf_count >= 1});
    std::vector<double> gm = collect(rows, "gamma_max_diam", 0);
    double worst = gm.empty() ? 0.0 : *std::min_element(gm.begin(), gm.end());
    audits.push_back({"gamma_min_max_diam", worst, 0.05, worst >= 0.05});
  } else {
    audits.push_back({"property_p", s.report.property_p ? 1.0 : 0.0, 1.0,
                      s.report.property_p});
    double lo = 1e300, hi = 0.0;
    for (size_t pi = 0; pi < cfg.probes.size(); ++pi)
      for (double v : collect(rows, "probe_diam_ratio", static_cast<int>(pi))) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    audits.push_back({"probe_ratio_low", lo, 0.2, lo >= 0.2});
    audits.push_back({"probe_ratio_high", hi, 5.0, hi <= 5.0});
    std::vector<double> pd = collect(rows, "postsingular_dist", 0);
    double worst = pd.empty() ? 0.0 : *std::min_element(pd.begin(), pd.end());
    audits.push_back({"postsingular_distance", worst, 0.5, worst >= 0.5});
  }
  write_audits_csv(cfg.out_dir + "/audits.csv", audits);
  for (const Audit& a : audits)
    if (!a.pass) return 2;
  return 0;
}

}  // namespace

int cmd_lamination(const RunConfig& cfg0) {
  RunConfig cfg = cfg0;
  PinchSetup s = build_setup(cfg, false);
  std::filesystem::create_directories(cfg.out_dir);
  write_manifest(cfg, cfg.out_dir + "/manifest.json");
  write_lamination_json(cfg.out_dir + "/lamination.json", s.go);
  {
    std::ofstream out(cfg.out_dir + "/report.json", std::ios::binary);
    out << report_json(s.report, s.go).dump(1) << "\n";
  }
  if (cfg.expect_property_p && s.report.property_p != *cfg.expect_property_p)
    return 2;
  return 0;
}

int cmd_moduli_selftest(const RunConfig& cfg0) {
  RunConfig cfg = cfg0;
  std::filesystem::create_directories(cfg.out_dir);
  write_manifest(cfg, cfg.out_dir + "/manifest.json");
  std::vector<ModuliCheckRow> rows;
  const double e1 = std::exp(1.0);

  AnnulusSpec ann = AnnulusSpec::round_spec(0.0, 1.0, e1);
  double formula = round_annulus_modulus(ann);
  rows.push_back({"round_formula", "r=1 R=e", formula, 1.0 / (2.0 * kPi), 1e-12,
                  std::abs(formula - 1.0 / (2.0 * kPi)) <= 1e-12});

  // Calibration rows run the ascent to its plateau; the averaged update
  // converges like 1/n and 50 iterations still sit a few percent short.
  ExtremalLengthOptions el_opt;
  el_opt.iterations = 400;

  double join = annulus_extremal_length(ann, FamilyKind::joining, el_opt);
  rows.push_back({"round_grid_joining", "r=1 R=e", join, formula, 0.02,
                  std::abs(join - formula) <= 0.02 * formula});

  double sep = annulus_extremal_length(ann, FamilyKind::separating, el_opt);
  double product = join * sep;
  rows.push_back({"round_duality", "r=1 R=e", product, 1.0, 0.05,
                  std::abs(product - 1.0) <= 0.05});

  {
    QuadrilateralSpec quad;
    quad.boundary.pts = {{0, 0}, {0, 1}, {2, 1}, {2, 0}};
    quad.boundary.closed = true;
    quad.marks = {0, 1, 2, 3};
    double m = quadrilateral_module(quad, el_opt);
    rows.push_back({"rectangle_2x1", "marks on the short sides", m, 2.0, 0.05,
                    std::abs(m - 2.0) <= 0.05 * 2.0});
  }
  {
    QuadrilateralSpec quad;
    quad.boundary.pts = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    quad.boundary.closed = true;
    quad.marks = {0, 1, 2, 3};
    double m = quadrilateral_module(quad, el_opt);
    rows.push_back({"square_1x1", "unit square", m, 1.0, 0.05,
                    std::abs(m - 1.0) <= 0.05});
  }
  {
    AnnulusSpec big = AnnulusSpec::round_spec(0.0, 1.0, e1 * e1);
    std::vector<AnnulusSpec> parts = {AnnulusSpec::round_spec(0.0, 1.0, e1),
                                      AnnulusSpec::round_spec(0.0, e1, e1 * e1)};
    rows.push_back(superadditivity_check(big, parts, 1e-10));
  }

  std::mt19937_64 rng(cfg.seed);
  for (int i = 0; i < 200; ++i) {
    cplx c(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    double r = uniform(rng, 0.3, 0.8);
    double R = r * std::exp(uniform(rng, 0.5, 2.0));
    AnnulusSpec B = AnnulusSpec::round_spec(c, r, R);
    double th1 = uniform(rng, 0.0, 2.0 * kPi), th2 = uniform(rng, 0.0, 2.0 * kPi);
    cplx a1 = c + 0.5 * r * std::exp(cplx(0.0, th1));
    cplx b1 = c + 0.8 * r * std::exp(cplx(0.0, th2));
    double th3 = uniform(rng, 0.0, 2.0 * kPi);
    SpherePoint a2 = SpherePoint::finite(
        c + R * uniform(rng, 1.2, 3.0) * std::exp(cplx(0.0, th3)));
    SpherePoint b2 = (i % 5 == 0)
                         ? SpherePoint::infinity()
                         : SpherePoint::finite(c + R * uniform(rng, 1.2, 3.0) *
                                                       std::exp(cplx(0.0, -th3)));
    rows.push_back(separation_bound_check(B, a1, b1, a2, b2));
  }

  write_moduli_csv(cfg.out_dir + "/moduli_selftest.csv", rows);
  for (const ModuliCheckRow& r : rows)
    if (!r.pass) return 2;
  return 0;
}

int cmd_thma_probe(const RunConfig& cfg0) {
  RunConfig cfg = cfg0;
  PinchSetup s = build_setup(cfg, true);
  return run_pinch_deformation(cfg, s, true);
}

int cmd_thmd_pinch(const RunConfig& cfg0) {
  RunConfig cfg = cfg0;
  PinchSetup s = build_setup(cfg, false);
  return run_pinch_deformation(cfg, s, false);
}

}  // namespace pinch
