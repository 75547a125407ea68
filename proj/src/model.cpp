#include "oqho/model.hpp"

#include <cmath>

namespace oqho::model {

using numerics::require_finite;

void oqho_model::validate() const {
  require_finite(theta, "model.theta");
  require_finite(R, "model.R");
  require_finite(M, "model.M");
  const int nn = n(), mm = m();
  if (nn < 2 || nn % 2 != 0) throw invalid_input("model: n must be a positive even integer");
  if (mm < 2 || mm % 2 != 0) throw invalid_input("model: m must be a positive even integer");
  if (theta.cols() != nn) throw invalid_input("model: theta must be square");
  if (R.rows() != nn || R.cols() != nn)
    throw invalid_input("model: R must be n x n to match theta");
  if (M.cols() != nn) throw invalid_input("model: M must be m x n to match theta");
  const double scale = 1.0 + theta.cwiseAbs().maxCoeff() + R.cwiseAbs().maxCoeff();
  if ((theta + theta.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw invalid_input("model: theta must be antisymmetric");
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw invalid_input("model: R must be symmetric");
  Eigen::FullPivLU<Mat> lu(theta);
  if (!lu.isInvertible()) throw invalid_input("model: theta must be nonsingular");
}

namespace {

Mat half_symplectic(int size, double scale) {
  const int half = size / 2;
  Mat out = Mat::Zero(size, size);
  out.block(0, half, half, half) = scale * Mat::Identity(half, half);
  out.block(half, 0, half, half) = -scale * Mat::Identity(half, half);
  return out;
}

}  // namespace

Mat ccr_position_momentum(int n) {
  if (n < 2 || n % 2 != 0)
    throw invalid_input("ccr_position_momentum: n must be a positive even integer");
  return half_symplectic(n, 0.5);
}

Mat ito_coupling_matrix(int m) {
  if (m < 2 || m % 2 != 0)
    throw invalid_input("ito_coupling_matrix: m must be a positive even integer");
  return half_symplectic(m, 1.0);
}

state_space build_state_space(const oqho_model& model) {
  model.validate();
  state_space ss;
  ss.J = ito_coupling_matrix(model.m());
  ss.A = 2.0 * model.theta * (model.R + model.M.transpose() * ss.J * model.M);
  ss.B = 2.0 * model.theta * model.M.transpose();
  ss.C = 2.0 * ss.J * model.M;
  ss.omega = CMat::Identity(model.m(), model.m()) + cplx(0.0, 1.0) * ss.J;
  return ss;
}

pr_report check_physical_realizability(const state_space& ss, const Mat& theta) {
  if (theta.rows() != ss.A.rows() || ss.B.cols() != ss.J.rows() || ss.C.rows() != ss.J.rows())
    throw invalid_input("check_physical_realizability: dimension mismatch");
  pr_report rep;
  rep.dynamics_residual =
      (ss.A * theta + theta * ss.A.transpose() + ss.B * ss.J * ss.B.transpose())
          .cwiseAbs().maxCoeff();
  rep.coupling_residual = (theta * ss.C.transpose() + ss.B * ss.J).cwiseAbs().maxCoeff();
  double scale = theta.cwiseAbs().maxCoeff();
  scale = std::max(scale, ss.A.cwiseAbs().maxCoeff());
  scale = std::max(scale, ss.B.cwiseAbs().maxCoeff());
  scale = std::max(scale, ss.C.cwiseAbs().maxCoeff());
  rep.tolerance = 1e-9 * (1.0 + scale);
  rep.pass = rep.dynamics_residual <= rep.tolerance && rep.coupling_residual <= rep.tolerance;
  return rep;
}

stability_report is_hurwitz(const Mat& a) {
  numerics::require_finite(a, "is_hurwitz input");
  stability_report rep;
  rep.spectral_abscissa = numerics::spectral_abscissa(a);
  rep.hurwitz = rep.spectral_abscissa < -numerics::hurwitz_margin;
  return rep;
}

}  // namespace oqho::model
