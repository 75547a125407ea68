#pragma once

#include <string>

#include "oqho/bounds.hpp"
#include "oqho/spectral.hpp"

namespace oqho::io {

inline constexpr const char* version_string = "0.1.0";

/// Shortest representation that round-trips to the same double.
std::string format_double(double x);

std::string sha256_hex(const std::string& bytes);

/// Run identity stamped into every output file.
struct provenance {
  std::string config_hash;  // sha256 of the configuration bytes
  std::uint64_t seed = 0;
  std::string version = version_string;

  std::string line() const;  // "config_sha256=... seed=... version=..."
};

/// Write-temp-then-rename.
void atomic_write(const std::string& path, const std::string& content);

std::string matrix_csv(const Mat& m, const provenance& prov, const std::string& label);
std::string spectrum_csv(const Mat& a, const provenance& prov);

std::string field_csv(const spectral::correction_field& field, const provenance& prov);
std::string field_binary(const spectral::correction_field& field, const provenance& prov);
spectral::correction_field read_field_binary(const std::string& bytes);

/// Key-value tree document with all scalars at full double precision.
std::string report_text(const bounds::sensitivity_report& rep, int n,
                        const provenance& prov);

std::string gaussian_state_json(const Vec& mu, const Mat& sigma, const provenance& prov);

}  // namespace oqho::io
