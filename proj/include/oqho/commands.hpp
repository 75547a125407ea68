#pragma once

#include <iosfwd>

#include "oqho/config.hpp"

namespace oqho::commands {

// exit codes: 0 success, 1 numerical/acceptance failure, 2 configuration error
inline constexpr int exit_ok = 0;
inline constexpr int exit_numerical = 1;
inline constexpr int exit_config = 2;

int cmd_check(const config::run_config& cfg, std::ostream& out);
int cmd_invariant(const config::run_config& cfg, const std::string& out_dir, std::ostream& out);
int cmd_correct(const config::run_config& cfg, const std::string& what,
                const std::string& out_dir, double t, std::ostream& out);
int cmd_bounds(const config::run_config& cfg, const std::string& out_dir, std::ostream& out);
int cmd_repro(const std::string& which, const std::string& out_dir, std::ostream& out);
/// Same comparison table against a caller-supplied configuration.
int cmd_repro(const std::string& which, const config::run_config& cfg, std::ostream& out);

/// Bundled configurations carrying the published example matrices.
const char* bundled_config(const std::string& which);  // "example1" | "example2"

}  // namespace oqho::commands
