#pragma once

#include "oqho/numerics.hpp"

namespace oqho::model {

/// Physical specification of an open quantum harmonic oscillator:
/// CCR matrix theta (n x n, antisymmetric, nonsingular), energy matrix R
/// (n x n, symmetric) and coupling matrix M (m x n).
struct oqho_model {
  Mat theta;
  Mat R;
  Mat M;

  int n() const { return static_cast<int>(theta.rows()); }
  int m() const { return static_cast<int>(M.rows()); }
  void validate() const;
};

/// Linear-dynamics view: dX = A X dt + B dW, dY = C X dt + dW, with the
/// Ito matrix Omega = I + iJ of the driving fields.
struct state_space {
  Mat A;
  Mat B;
  Mat C;
  Mat J;
  CMat omega;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(C.rows()); }
};

/// Position-momentum CCR matrix (1/2) [[0,1],[-1,0]] (x) I_{n/2}.
Mat ccr_position_momentum(int n);

/// Field coupling matrix J = [[0,1],[-1,0]] (x) I_{m/2}; J^2 = -I.
Mat ito_coupling_matrix(int m);

/// A = 2 Theta (R + M^T J M), B = 2 Theta M^T, C = 2 J M.
state_space build_state_space(const oqho_model& model);

struct pr_report {
  double dynamics_residual;  // max-abs of A Theta + Theta A^T + B J B^T
  double coupling_residual;  // max-abs of Theta C^T + B J
  double tolerance;
  bool pass;
};

/// Physical realizability check; tolerance 1e-9 * (1 + max input magnitude).
pr_report check_physical_realizability(const state_space& ss, const Mat& theta);

struct stability_report {
  bool hurwitz;
  double spectral_abscissa;
};

stability_report is_hurwitz(const Mat& a);

}  // namespace oqho::model
