#pragma once
// Run configuration, manifests, and the headline experiment drivers behind
// the command-line tool: plane renders, the Baker classification table, the
// moduli self-test, lamination builds, and the two pinch deformation runs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pinch/dynamics.hpp"
#include "pinch/lamination.hpp"
#include "pinch/pinchfield.hpp"
#include "pinch/solver.hpp"

namespace pinch {

struct AnchorPair {
  SpherePoint a = SpherePoint::infinity();
  SpherePoint b = SpherePoint::infinity();
};

struct ClassifyEntry {
  std::string function;
  cplx probe{-5.0, 0.0};
};

// Fully resolved run document. Loaded strictly: unknown keys anywhere in the
// file are an error, so configs cannot silently drift from the schema.
struct RunConfig {
  std::string function = "bergweiler";
  std::string expr_text;  // overrides the catalog entry when nonempty
  Window window;
  bool window_set = false;
  int resolution = 512;
  int budget = 500;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";

  bool koenigs_set = false;
  cplx p_star{0.0, 0.0};
  double a = 2.0;
  int n_K = 25;

  std::vector<AnchorPair> anchors;
  double delta = kPi / 6.0;
  int translate_range = 3;
  std::optional<bool> expect_property_p;

  PinchProfile profile;
  int K_max = 3;
  double support_margin = 0.12;
  std::vector<double> t_grid;  // empty -> default_t_grid(profile)

  int solver_resolution = 512;
  int solver_max_iterations = 500;
  double solver_tolerance = 1e-9;
  std::optional<cplx> norm_p;
  std::optional<cplx> norm_q;

  std::vector<ProbeDisc> probes;
  std::vector<ClassifyEntry> classify_entries;

  std::vector<int> gamma_heights{1, -1, 2, -2};  // branch rows, units of 2*pi
  int gamma_depth = 2;
};

RunConfig load_run_config(const std::string& path);
void write_manifest(const RunConfig& cfg, const std::string& path);

// {0, 0.2, 0.4, 0.6, ...} then halving steps toward the profile cap; the
// last entry is t_cap itself.
std::vector<double> default_t_grid(const PinchProfile& profile);

// The repelling real boundary fixed point near -0.9 and the affine-model
// data of the invariant left half plane.
struct BergweilerBasics {
  cplx x0{0.0, 0.0};
  cplx p_star{0.0, 0.0};
  double a = 2.0;
};
BergweilerBasics bergweiler_basics(const EntireMap& f);

// Exit status convention: 0 all audits pass, 2 an audit failed; errors throw.
int cmd_render(const RunConfig& cfg);
int cmd_classify(const RunConfig& cfg);
int cmd_lamination(const RunConfig& cfg);
int cmd_moduli_selftest(const RunConfig& cfg);
int cmd_thma_probe(const RunConfig& cfg);
int cmd_thmd_pinch(const RunConfig& cfg);

}  // namespace pinch
