#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oqho/perturb.hpp"

namespace oqho::config {

struct run_config {
  model::oqho_model mdl;
  weyl::weyl_variation variation;

  int grid_count = 256;
  std::optional<double> grid_half_width;  // default 8 sqrt(max diag P)

  perturb::time_rule trule;
  perturb::w_rule wrule;

  std::vector<double> theta_weights{0.5, 1.0, 2.0, 4.0};
  std::uint64_t mc_count = 100000;
  double lambda_fraction = 0.9;

  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool write_csv = true;
  bool write_binary = true;

  std::string raw_text;  // configuration bytes, hashed into provenance
};

/// Parses and schema-validates a configuration document.  Violations raise
/// config_error carrying the JSON-pointer-style field path.
run_config parse_config(const std::string& text);
run_config load_config(const std::string& path);

}  // namespace oqho::config
