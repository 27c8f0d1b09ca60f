#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "pinch/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void attach(CLI::App* sub, CommonArgs& args, bool config_required) {
  auto* c = sub->add_option("--config", args.config, "run config JSON");
  if (config_required) c->required();
  sub->add_option("--out", args.out, "output directory override");
  sub->add_option("--seed", args.seed, "randomized-audit seed override")
      ->each([&args](const std::string&) { args.seed_set = true; });
  sub->add_option("--threads", args.threads, "worker thread count override");
}

pinch::RunConfig load(const CommonArgs& args) {
  pinch::RunConfig cfg;
  if (!args.config.empty()) cfg = pinch::load_run_config(args.config);
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.threads > 0) cfg.threads = args.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Baker-domain pinching deformation toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* render = app.add_subcommand("render", "dynamical-plane raster and fixed points");
  attach(render, args, true);
  CLI::App* classify = app.add_subcommand("classify", "Baker-domain classification table");
  attach(classify, args, false);
  CLI::App* lamination = app.add_subcommand("lamination", "build and validate a lamination");
  attach(lamination, args, true);
  CLI::App* moduli = app.add_subcommand("moduli-selftest", "modulus calibrations and inequality audits");
  attach(moduli, args, false);
  CLI::App* thma = app.add_subcommand("thma-probe", "divergence signature of the ideal-endpoint pinch");
  attach(thma, args, true);
  CLI::App* thmd = app.add_subcommand("thmd-pinch", "two-leaf pinch deformation run");
  attach(thmd, args, true);

  CLI11_PARSE(app, argc, argv);

  try {
    pinch::RunConfig cfg = load(args);
    if (render->parsed()) return pinch::cmd_render(cfg);
    if (classify->parsed()) return pinch::cmd_classify(cfg);
    if (lamination->parsed()) return pinch::cmd_lamination(cfg);
    if (moduli->parsed()) return pinch::cmd_moduli_selftest(cfg);
    if (thma->parsed()) return pinch::cmd_thma_probe(cfg);
    if (thmd->parsed()) return pinch::cmd_thmd_pinch(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
