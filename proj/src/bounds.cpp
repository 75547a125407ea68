#include "oqho/bounds.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oqho::bounds {

namespace nm = numerics;

lyapunov_pair find_lyapunov_pair(const model::state_space& ss, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw invalid_input("find_lyapunov_pair: fraction must lie in (0, 1)");
  const auto stab = model::is_hurwitz(ss.A);
  if (!stab.hurwitz) throw stability_error("find_lyapunov_pair: A is not Hurwitz");
  lyapunov_pair pair;
  pair.lambda = fraction * (-stab.spectral_abscissa);
  pair.gamma = nm::solve_shifted_lyapunov(ss.A, pair.lambda);
  return pair;
}

double tau_factor(const lyapunov_pair& pair, const Mat& theta, const Mat& p, const Mat& s) {
  const Mat gi = pair.gamma.llt().solve(Mat::Identity(pair.gamma.rows(), pair.gamma.cols()));
  const Mat ths = theta * s.transpose();
  const Mat ps = p * s.transpose();
  const Mat num = ths.transpose() * gi * ths;  // PSD
  const Mat den = ps.transpose() * gi * ps;
  Eigen::LLT<Mat> llt(den);
  if (llt.info() != Eigen::Success)
    throw degeneracy_error("tau_factor: S P Gamma^{-1} P S^T is singular");
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(num, den, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, ges.eigenvalues().maxCoeff()));
}

namespace {

double expm1_over(double x) {
  // expm1(x)/x with the removable singularity handled
  return std::abs(x) < 1e-8 ? 1.0 + 0.5 * x : std::expm1(x) / x;
}

struct bound_terms {
  double tau;
  Mat gamma_isqrt;
  double d_gis_norm;    // |D Gamma^{-1/2}|
  double mth_gis_norm;  // |M Theta Gamma^{-1/2}|
};

bound_terms make_bound_terms(const lyapunov_pair& pair,
                             const perturb::perturbation_context& ctx) {
  bound_terms bt;
  bt.tau = tau_factor(pair, ctx.theta, ctx.P, ctx.variation.S);
  Eigen::SelfAdjointEigenSolver<Mat> es(pair.gamma);
  bt.gamma_isqrt = es.operatorInverseSqrt();
  bt.d_gis_norm = (ctx.D * bt.gamma_isqrt).jacobiSvd().singularValues()(0);
  bt.mth_gis_norm = (ctx.MTh * bt.gamma_isqrt).jacobiSvd().singularValues()(0);
  return bt;
}

}  // namespace

double bound_F(const lyapunov_pair& pair, const perturb::perturbation_context& ctx,
               const Vec& u, const Vec& w) {
  const double tau = tau_factor(pair, ctx.theta, ctx.P, ctx.variation.S);
  const Vec v = ctx.variation.S.transpose() * w;
  const double x = std::sqrt(u.dot(pair.gamma * u));
  const Vec pv = ctx.P * v;
  const double y = std::sqrt(pv.dot(pair.gamma.llt().solve(pv)));
  const double pref = std::exp(-0.5 * (u.dot(ctx.P * u) + v.dot(ctx.P * v)));
  return (2.0 * tau / pair.lambda) * pref * std::expm1(x * y);
}

double bound_G(const lyapunov_pair& pair, const perturb::perturbation_context& ctx,
               const Vec& u, const Vec& w) {
  const bound_terms bt = make_bound_terms(pair, ctx);
  const Vec v = ctx.variation.S.transpose() * w;
  const double x = std::sqrt(u.dot(pair.gamma * u));
  const Vec pv = ctx.P * v;
  const double y = std::sqrt(pv.dot(pair.gamma.llt().solve(pv)));
  const double pref = std::exp(-0.5 * (u.dot(ctx.P * u) + v.dot(ctx.P * v)));
  const double regular = bt.tau * (bt.d_gis_norm * x + (ctx.D * v).norm()) * std::expm1(x * y);
  const double limit = 2.0 * bt.mth_gis_norm * x * expm1_over(x * y);
  return (2.0 / pair.lambda) * pref * (regular + limit);
}

double mean_sensitivity_norm(const perturb::perturbation_context& ctx, double theta_weight) {
  if (!(theta_weight >= 0.0))
    throw invalid_input("mean_sensitivity_norm: theta must be nonnegative");
  const int d = ctx.d();
  const Mat& s = ctx.variation.S;
  const Mat w = theta_weight * Mat::Identity(d, d) + s * ctx.P * s.transpose();
  Eigen::LLT<Mat> llt(w);
  if (llt.info() != Eigen::Success)
    throw degeneracy_error("mean_sensitivity_norm: theta I + S P S^T is singular");
  const Mat ainv_th_st = ctx.ss.A.partialPivLu().solve(ctx.theta * s.transpose());  // A^{-1} Th S'
  const Mat core = ainv_th_st.transpose() * ainv_th_st;  // = -S Th A^{-T} A^{-1} Th S'
  const double inner = (llt.solve(core)).trace();
  return std::sqrt(2.0) * std::pow(std::numbers::pi, 0.25 * d) *
         std::pow(w.determinant(), -0.25) * std::sqrt(std::max(0.0, inner));
}

namespace {

constexpr std::uint64_t mc_block = 4096;

struct partial {
  double sum_f = 0.0, sum_f2 = 0.0, sum_g = 0.0, sum_g2 = 0.0;
};

}  // namespace

mc_norms mc_norm_bounds(const lyapunov_pair& pair, const perturb::perturbation_context& ctx,
                        double theta_weight, const numerics::seeded_sampler& sampler,
                        std::uint64_t count, exec_policy policy) {
  if (count == 0) throw invalid_input("mc_norm_bounds: count must be positive");
  const int n = ctx.n();
  const int d = ctx.d();
  const Mat& s = ctx.variation.S;
  const Mat wmat = theta_weight * Mat::Identity(d, d) + s * ctx.P * s.transpose();

  const Mat cov_nu = 0.5 * ctx.P.llt().solve(Mat::Identity(n, n));
  const Mat cov_om = 0.5 * wmat.llt().solve(Mat::Identity(d, d));
  Eigen::LLT<Mat> lnu(0.5 * (cov_nu + cov_nu.transpose()));
  Eigen::LLT<Mat> lom(0.5 * (cov_om + cov_om.transpose()));
  if (lnu.info() != Eigen::Success || lom.info() != Eigen::Success)
    throw numerical_error("mc_norm_bounds: sampling covariance not positive definite");
  const Mat l_nu = lnu.matrixL();
  const Mat l_om = lom.matrixL();

  const bound_terms bt = make_bound_terms(pair, ctx);
  const Mat gamma = pair.gamma;
  const Mat gamma_inv = gamma.llt().solve(Mat::Identity(n, n));
  const Mat ps = ctx.P * s.transpose();
  const Mat ds = ctx.D * s.transpose();

  // Finiteness of E (e^{|nu|_G |P S'om|_{G^{-1}}} - 1)^2: the extreme
  // eigendirections give the exact divergence criterion.
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es1(gamma, ctx.P, Eigen::EigenvaluesOnly);
  const Mat m2 = bt.gamma_isqrt * ps * wmat.llt().solve(ps.transpose()) * bt.gamma_isqrt;
  Eigen::SelfAdjointEigenSolver<Mat> es2(0.5 * (m2 + m2.transpose()), Eigen::EigenvaluesOnly);
  const double q = es1.eigenvalues().maxCoeff() * es2.eigenvalues().maxCoeff();

  const numerics::seeded_sampler nu_sampler{sampler.seed, sampler.stream * 2 + 1};
  const numerics::seeded_sampler om_sampler{sampler.seed, sampler.stream * 2 + 2};

  const std::uint64_t blocks = (count + mc_block - 1) / mc_block;
  std::vector<partial> parts(blocks);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (policy == exec_policy::parallel)
#endif
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
    const std::uint64_t begin = static_cast<std::uint64_t>(b) * mc_block;
    const std::uint64_t end = std::min(count, begin + mc_block);
    partial p;
    Vec znu(n), zom(d);
    for (std::uint64_t i = begin; i < end; ++i) {
      for (int j = 0; j < n; ++j) znu[j] = nu_sampler.normal(i * n + j);
      for (int j = 0; j < d; ++j) zom[j] = om_sampler.normal(i * d + j);
      const Vec nu = l_nu * znu;
      const Vec om = l_om * zom;
      const double x = std::sqrt(nu.dot(gamma * nu));
      const Vec psom = ps * om;
      const double y = std::sqrt(psom.dot(gamma_inv * psom));
      const double ef = std::expm1(x * y);
      p.sum_f += ef * ef;
      p.sum_f2 += ef * ef * ef * ef;
      const double bracket = bt.tau * (bt.d_gis_norm * x + (ds * om).norm()) * ef +
                             2.0 * bt.mth_gis_norm * x * expm1_over(x * y);
      p.sum_g += bracket * bracket;
      p.sum_g2 += bracket * bracket * bracket * bracket;
    }
    parts[static_cast<std::size_t>(b)] = p;
  }

  partial total;
  for (const partial& p : parts) {  // fixed order: thread-count independent
    total.sum_f += p.sum_f;
    total.sum_f2 += p.sum_f2;
    total.sum_g += p.sum_g;
    total.sum_g2 += p.sum_g2;
  }

  const double cnt = static_cast<double>(count);
  const double det_term = std::sqrt(ctx.P.determinant() * wmat.determinant());
  const double pi_pow = std::pow(std::numbers::pi, 0.5 * (n + d));
  const double pref_f = std::pow(2.0 * bt.tau / pair.lambda, 2) * pi_pow / det_term;
  const double pref_g = std::pow(2.0 / pair.lambda, 2) * pi_pow / det_term;

  auto finish = [cnt](double sum, double sum2, double pref) {
    mc_estimate e;
    const double mean = sum / cnt;
    const double var = cnt > 1 ? std::max(0.0, (sum2 - cnt * mean * mean) / (cnt - 1)) : 0.0;
    e.mean_sq = pref * mean;
    e.std_error_sq = pref * std::sqrt(var / cnt);
    e.value = std::sqrt(std::max(0.0, e.mean_sq));
    e.std_error = e.value > 0.0 ? 0.5 * e.std_error_sq / e.value : std::sqrt(e.std_error_sq);
    return e;
  };

  mc_norms out;
  out.count = count;
  out.f_norm = finish(total.sum_f, total.sum_f2, pref_f);
  out.g_norm = finish(total.sum_g, total.sum_g2, pref_g);
  out.divergence_warning = q >= 1.0;
  return out;
}

double hs_qcf_bound(double mc_norm_f, double mc_norm_g, double psi_norm, double upsilon_norm) {
  return std::sqrt(mc_norm_f * mc_norm_f + mc_norm_g * mc_norm_g) *
         std::sqrt(psi_norm * psi_norm + upsilon_norm * upsilon_norm);
}

sensitivity_report run_sensitivity(const perturb::perturbation_context& ctx,
                                   const lyapunov_pair& pair,
                                   const std::vector<double>& theta_weights,
                                   const numerics::seeded_sampler& sampler,
                                   std::uint64_t count, exec_policy policy) {
  sensitivity_report rep;
  rep.lambda = pair.lambda;
  rep.tau = tau_factor(pair, ctx.theta, ctx.P, ctx.variation.S);
  rep.seed = sampler.seed;
  rep.stream = sampler.stream;
  rep.sample_count = count;

  for (double theta : theta_weights) {
    theta_entry e;
    e.theta = theta;
    e.mean_sensitivity = mean_sensitivity_norm(ctx, theta);
    const mc_norms mc = mc_norm_bounds(pair, ctx, theta, sampler, count, policy);
    e.mc_norm_f = mc.f_norm;
    e.mc_norm_g = mc.g_norm;
    e.divergence_warning = mc.divergence_warning;
    try {
      double psi2 = 0.0;
      const double pn = weyl::weighted_norm(ctx.variation.psi, theta);
      psi2 = pn * pn;
      double ups2 = 0.0;
      for (const auto& f : ctx.variation.upsilon) {
        const double un = weyl::weighted_norm(f, theta);
        ups2 += un * un;
      }
      e.psi_norm = std::sqrt(psi2);
      e.upsilon_norm = std::sqrt(ups2);
      e.hs_bound = hs_qcf_bound(e.mc_norm_f.value, e.mc_norm_g.value, e.psi_norm,
                                e.upsilon_norm);
    } catch (const divergence_error&) {
      e.strength_norm_divergent = true;
      e.psi_norm = std::numeric_limits<double>::infinity();
      e.hs_bound = std::numeric_limits<double>::infinity();
    }
    e.hs_bound_qpdf = e.hs_bound * std::pow(2.0 * std::numbers::pi, -0.5 * ctx.n());
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace oqho::bounds
