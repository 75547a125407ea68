#pragma once

#include <functional>

#include "oqho/perturb.hpp"

namespace oqho::spectral {

enum class exec_policy { serial, parallel };

/// One uniform axis centered at the origin: points (k - count/2) * spacing,
/// k = 0..count-1.  count is a power of two, >= 32.
struct grid_spec {
  int count;
  double spacing;

  double point(int k) const { return (k - count / 2) * spacing; }
  double half_width() const { return (count / 2) * spacing; }
  void validate() const;
};

struct correction_field {
  enum class field_kind { qcf, qpdf };
  field_kind kind;
  std::vector<grid_spec> axes;
  std::vector<cplx> cvalues;    // kind == qcf
  std::vector<double> rvalues;  // kind == qpdf

  // diagnostics filled by the producers
  double hermitian_residue = 0.0;  // max paired |f(u) - conj(f(-u))| / 2
  double nyquist_adjustment = 0.0;

  int dims() const { return static_cast<int>(axes.size()); }
  std::size_t size() const;
  std::size_t flat(const std::vector<int>& idx) const;
  Vec coords(std::size_t flat_index) const;
  double cell_volume() const;
};

/// Default grid for a model: 256 points per axis, half-width
/// 8 sqrt(max diag P).
std::vector<grid_spec> default_grid(const Mat& p, int count = 256);

/// Samples the steady-state QCF correction on the grid.  Checks that the nominal
/// Gaussian e^{-0.5 u' P u} decays below 1e-10 at the boundary.
correction_field sample_qcf_correction(const perturb::perturbation_context& ctx,
                                       const std::vector<grid_spec>& grid,
                                       exec_policy policy = exec_policy::parallel);

/// Samples an arbitrary QCF-like function on a grid (no coverage check).
correction_field sample_qcf(const std::function<cplx(const Vec&)>& fn,
                            const std::vector<grid_spec>& grid,
                            exec_policy policy = exec_policy::parallel);

/// Centered discrete transform (2pi)^{-n} int Phi(u) e^{-i u.x} du with the
/// continuum normalization applied explicitly.  The input is Hermitian-
/// symmetrized in DFT index space first (self-paired extreme rows included);
/// the paired asymmetry is asserted <= 1e-7 and recorded.
correction_field qpdf_from_qcf(const correction_field& field,
                               exec_policy policy = exec_policy::parallel);

/// Trapezoid-sums the dropped axes away.
correction_field marginal(const correction_field& field, const std::vector<int>& keep_axes);

/// Grid quadrature of x^monomial * field(x); total degree <= 4.
double field_moment(const correction_field& field, const std::vector<int>& exponents);

/// int sigma(u) Phi(u) du over the grid, against the nominal invariant QCF,
/// optionally plus the first-order correction.
cplx generalized_moment(const perturb::perturbation_context& ctx,
                        const std::function<cplx(const Vec&)>& sigma_fn,
                        const std::vector<grid_spec>& grid, bool include_correction = false);

}  // namespace oqho::spectral
