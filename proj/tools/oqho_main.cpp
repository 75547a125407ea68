#include <cstdlib>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "oqho/commands.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* env = std::getenv("OQHO_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) omp_set_num_threads(cap);
  }
#endif
}

oqho::config::run_config load(const std::string& path, std::optional<std::uint64_t> seed) {
  auto cfg = oqho::config::load_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"oqho: invariant Gaussian states of open quantum harmonic oscillators and "
               "their first-order corrections under Weyl perturbations"};
  app.require_subcommand(1);

  std::string config_path, out_dir, what = "qcf", which = "example1";
  std::optional<std::uint64_t> seed;
  double t_horizon = 0.0;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", config_path, "configuration file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the configuration)");
    sub->add_option("--seed", seed, "seed override");
  };

  auto* check = app.add_subcommand("check", "physical realizability and stability report");
  add_common(check, true);
  auto* invariant = app.add_subcommand("invariant", "invariant covariance and spectrum files");
  add_common(invariant, true);
  auto* correct = app.add_subcommand("correct", "first-order correction fields and moments");
  add_common(correct, true);
  correct->add_option("--what", what, "qcf|qpdf|moments|transient")->required();
  correct->add_option("--t", t_horizon, "time horizon for transient corrections");
  auto* bounds_cmd = app.add_subcommand("bounds", "sensitivity report with norm bounds");
  add_common(bounds_cmd, true);
  auto* repro = app.add_subcommand("repro", "reproduce the published example tables");
  repro->add_option("which", which, "example1|example2");
  repro->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      return oqho::commands::cmd_check(load(config_path, seed), std::cout);
    }
    if (invariant->parsed()) {
      auto cfg = load(config_path, seed);
      return oqho::commands::cmd_invariant(cfg, out_dir.empty() ? cfg.out_dir : out_dir,
                                           std::cout);
    }
    if (correct->parsed()) {
      auto cfg = load(config_path, seed);
      return oqho::commands::cmd_correct(cfg, what, out_dir.empty() ? cfg.out_dir : out_dir,
                                         t_horizon, std::cout);
    }
    if (bounds_cmd->parsed()) {
      auto cfg = load(config_path, seed);
      return oqho::commands::cmd_bounds(cfg, out_dir.empty() ? cfg.out_dir : out_dir,
                                        std::cout);
    }
    if (repro->parsed()) {
      return oqho::commands::cmd_repro(which, out_dir.empty() ? "out" : out_dir, std::cout);
    }
  } catch (const oqho::config_error& e) {
    std::cerr << "configuration error at " << e.what() << "\n";
    return oqho::commands::exit_config;
  } catch (const oqho::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return oqho::commands::exit_numerical;
  }
  return oqho::commands::exit_config;
}
