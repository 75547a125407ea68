#pragma once

#include <functional>

#include "oqho/model.hpp"

namespace oqho::gaussian {

using model::state_space;

struct gaussian_state {
  Vec mu;
  Mat sigma;
};

struct invariant_result {
  Mat P;
  bool positive_definite;  // iff (A, B) controllable
};

/// Unique solution of A P + P A^T + B B^T = 0 for Hurwitz A.
invariant_result invariant_covariance(const state_space& ss);

/// Smallest eigenvalue of the Hermitian matrix P + i Theta.
/// Feasible (Heisenberg) iff >= -1e-10.
double heisenberg_residual(const Mat& p, const Mat& theta);

/// Sigma(t) = int_0^t e^{sA} B B^T e^{sA^T} ds by composite Gauss-Legendre.
Mat finite_gramian(const state_space& ss, double t);

/// Infinite-horizon Gramian plus the finite-horizon handle Sigma(t).
struct gramian_pair {
  Mat P;
  std::function<Mat(double)> sigma_t;
};
gramian_pair make_gramian_pair(const state_space& ss);

/// exp(i mu^T u - 0.5 u^T Sigma u)
cplx gaussian_qcf(const gaussian_state& state, const Vec& u);

/// Multivariate normal density; requires positive definite sigma.
double gaussian_qpdf(const gaussian_state& state, const Vec& x);

/// Semigroup e^{t A_op} applied to an initial condition phi:
/// phi(e^{tA^T} u) * exp(-0.5 u^T Sigma(t) u).
cplx semigroup_apply(const state_space& ss, double t,
                     const std::function<cplx(const Vec&)>& phi, const Vec& u);

/// mu(t) = e^{tA} mu0, Sigma(t) = e^{tA} Sigma0 e^{tA^T} + Gramian(t).
gaussian_state evolve_moments(const state_space& ss, const Vec& mu0, const Mat& sigma0,
                              double t);

/// Kalman rank test with singular-value threshold 1e-10 * sigma_max.
bool controllable(const Mat& a, const Mat& b);

}  // namespace oqho::gaussian
