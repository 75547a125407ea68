#pragma once

#include <stdexcept>
#include <string>

namespace oqho {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_input : error {
  using error::error;
};

// A (or a shifted A) is not Hurwitz where stability is required.
struct stability_error : error {
  using error::error;
};

struct numerical_error : error {
  using error::error;
};

// Quadrature cannot reach the requested accuracy.
struct accuracy_error : error {
  using error::error;
};

// Weighted integral does not converge (weight too strong).
struct divergence_error : error {
  using error::error;
};

struct degeneracy_error : error {
  using error::error;
};

struct singularity_error : error {
  using error::error;
};

struct unsupported_representation : error {
  using error::error;
};

// Grid too narrow for the requested field or moment.
struct coverage_error : error {
  using error::error;
};

// Configuration file problem; carries the offending field path.
struct config_error : error {
  config_error(const std::string& field_path, const std::string& what)
      : error(field_path + ": " + what), path(field_path) {}
  std::string path;
};

}  // namespace oqho
