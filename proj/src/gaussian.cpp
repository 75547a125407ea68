#include "oqho/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace oqho::gaussian {

namespace nm = numerics;

bool controllable(const Mat& a, const Mat& b) {
  const Eigen::Index n = a.rows();
  Mat ctrb(n, n * b.cols());
  Mat block = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * b.cols(), b.cols()) = block;
    block = a * block;
  }
  Eigen::JacobiSVD<Mat> svd(ctrb);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return false;
  return sv[sv.size() - 1] > 1e-10 * sv[0];
}

invariant_result invariant_covariance(const state_space& ss) {
  invariant_result res;
  res.P = nm::solve_lyapunov(ss.A, ss.B * ss.B.transpose());
  res.positive_definite = controllable(ss.A, ss.B);
  return res;
}

double heisenberg_residual(const Mat& p, const Mat& theta) {
  CMat h = p.cast<cplx>() + cplx(0.0, 1.0) * theta.cast<cplx>();
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Mat finite_gramian(const state_space& ss, double t) {
  if (!(t >= 0.0)) throw invalid_input("finite_gramian: t must be nonnegative");
  const int n = ss.n();
  if (t == 0.0) return Mat::Zero(n, n);
  const Mat bbt = ss.B * ss.B.transpose();
  const double rate = std::abs(nm::spectral_abscissa(ss.A));
  const int panels = std::min(400, std::max(1, static_cast<int>(std::ceil(rate * t))));
  Mat acc = Mat::Zero(n, n);
  const double h = t / panels;
  for (int p = 0; p < panels; ++p) {
    const auto rule = nm::gauss_legendre(64, p * h, (p + 1) * h);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const Mat e = nm::matrix_exponential(ss.A, rule.nodes[i]);
      acc.noalias() += rule.weights[i] * (e * bbt * e.transpose());
    }
  }
  return 0.5 * (acc + acc.transpose());
}

gramian_pair make_gramian_pair(const state_space& ss) {
  gramian_pair gp;
  gp.P = invariant_covariance(ss).P;
  state_space copy = ss;
  gp.sigma_t = [copy](double t) { return finite_gramian(copy, t); };
  return gp;
}

cplx gaussian_qcf(const gaussian_state& state, const Vec& u) {
  const double quad = u.dot(state.sigma * u);
  return std::exp(cplx(-0.5 * quad, state.mu.dot(u)));
}

double gaussian_qpdf(const gaussian_state& state, const Vec& x) {
  const Eigen::Index n = state.sigma.rows();
  Eigen::LLT<Mat> llt(state.sigma);
  if (llt.info() != Eigen::Success)
    throw singularity_error("gaussian_qpdf: sigma is singular or indefinite");
  const Vec d = x - state.mu;
  const Vec y = llt.matrixL().solve(d);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
  return std::exp(-0.5 * y.squaredNorm() - logdet -
                  0.5 * n * std::log(2.0 * std::numbers::pi));
}

cplx semigroup_apply(const state_space& ss, double t,
                     const std::function<cplx(const Vec&)>& phi, const Vec& u) {
  if (!(t >= 0.0)) throw invalid_input("semigroup_apply: t must be nonnegative");
  const Mat et = nm::matrix_exponential(ss.A, t);
  const Mat sig = finite_gramian(ss, t);
  return phi(et.transpose() * u) * std::exp(-0.5 * u.dot(sig * u));
}

gaussian_state evolve_moments(const state_space& ss, const Vec& mu0, const Mat& sigma0,
                              double t) {
  if (!(t >= 0.0)) throw invalid_input("evolve_moments: t must be nonnegative");
  const Mat et = nm::matrix_exponential(ss.A, t);
  gaussian_state out;
  out.mu = et * mu0;
  out.sigma = et * sigma0 * et.transpose() + finite_gramian(ss, t);
  return out;
}

}  // namespace oqho::gaussian
