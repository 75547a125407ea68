#pragma once

#include <string>
#include <vector>

#include "oqho/numerics.hpp"

namespace oqho::weyl {

/// One Gaussian-shaped term of a strength function:
/// alpha * sqrt(det Lambda) / (2 pi)^{d/2} * exp(-i w^T gamma - 0.5 w^T Lambda w),
/// the Fourier transform of the potential alpha * exp(-0.5 |q - gamma|^2_{Lambda^{-1}}).
struct gaussian_term {
  double alpha;
  Vec gamma;
  Mat lambda;  // symmetric positive definite
};

/// Complex samples on a rectilinear grid, multilinearly interpolated and
/// zero outside the bounding box.  Axes must be symmetric about the origin;
/// values are Hermitian-symmetrized on ingestion.
struct tabulated_grid {
  std::vector<std::vector<double>> axes;
  std::vector<cplx> values;  // row-major over axes
  double symmetrization_deviation = 0.0;

  int d() const { return static_cast<int>(axes.size()); }
  cplx interpolate(const Vec& w) const;
};

class strength_function {
 public:
  enum class kind { zero, gaussian_mixture, tabulated };

  strength_function() = default;  // the zero function of dimension 0
  static strength_function zero(int d);
  static strength_function gaussian_mixture(std::vector<gaussian_term> terms);
  static strength_function tabulated(tabulated_grid grid);

  cplx operator()(const Vec& w) const;
  kind type() const { return kind_; }
  int dim() const { return d_; }
  bool is_zero() const;
  const std::vector<gaussian_term>& terms() const { return terms_; }
  const tabulated_grid& grid() const { return grid_; }

  /// Scales the function by c (mixture: scales every alpha).
  strength_function scaled(double c) const;
  /// Pointwise sum; both operands must share dimension and representable kind.
  friend strength_function operator+(const strength_function& a, const strength_function& b);

 private:

  kind kind_ = kind::zero;
  int d_ = 0;
  std::vector<gaussian_term> terms_;
  tabulated_grid grid_;
};

/// Loads CSV columns w_1..w_d, re, im into a Hermitian-symmetrized table.
strength_function load_tabulated_csv(const std::string& path, int d);

struct weyl_variation {
  Mat S;  // d x n row selection, a subarray of a permutation matrix
  strength_function psi;
  std::vector<strength_function> upsilon;  // one per field channel; empty = all zero

  int d() const { return static_cast<int>(S.rows()); }
  bool upsilon_is_zero() const;
  void validate(int n, int m) const;
};

cplx eval_psi(const weyl_variation& variation, const Vec& w);
CVec eval_upsilon(const weyl_variation& variation, const Vec& w, int m);

/// (int |f(w)|^2 e^{theta |w|^2} dw)^{1/2}.  For Gaussian mixtures requires
/// theta below the smallest Lambda eigenvalue of every term.
double weighted_norm(const strength_function& f, double theta_weight);

/// (pi/theta)^{d/4} * weighted_norm(f, theta); dominates the L^1 norm.
double l1_bound(const strength_function& f, double theta_weight);

/// Classical potential whose Fourier transform is psi (Gaussian mixtures only).
double potential_value(const weyl_variation& variation, const Vec& q);
Vec potential_gradient(const weyl_variation& variation, const Vec& q);

}  // namespace oqho::weyl
