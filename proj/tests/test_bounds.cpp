#include <random>

#include "doctest.h"
#include "oqho/bounds.hpp"
#include "oqho/gaussian.hpp"
#include "oracles.hpp"

using namespace oqho;
using spectral::exec_policy;

namespace {

struct fixture {
  model::oqho_model mdl;
  model::state_space ss;
  Mat P;
  weyl::weyl_variation var;
  perturb::perturbation_context ctx;
  bounds::lyapunov_pair pair;
};

fixture make_fixture(int n, bool with_upsilon = false) {
  fixture f;
  if (n == 2) {
    f.mdl.theta = model::ccr_position_momentum(2);
    f.mdl.R.resize(2, 2);
    f.mdl.R << 1.5803, 0.0, 0.0, 0.7490;
    f.mdl.M.resize(2, 2);
    f.mdl.M << -0.1765, -1.3320, 0.7914, -2.3299;
    f.var.S = Mat::Zero(1, 2);
    f.var.S(0, 0) = 1.0;
    weyl::gaussian_term t;
    t.alpha = -146.0546;
    t.gamma = Vec::Constant(1, 3.1641);
    t.lambda = Mat::Constant(1, 1, 0.1589);
    f.var.psi = weyl::strength_function::gaussian_mixture({t});
  } else {
    f.mdl.theta = model::ccr_position_momentum(4);
    f.mdl.R.resize(4, 4);
    f.mdl.R << 2.5542, -2.3651, 0, 0, -2.3651, 2.6995, 0, 0, 0, 0, 0.9306, -1.4504, 0, 0,
        -1.4504, 7.4900;
    f.mdl.M.resize(4, 4);
    f.mdl.M << 0.3021, 1.1784, 0.0313, -1.4647, 0.0131, -0.2981, 1.5002, 0.5361, -0.0110,
        -0.0418, -1.1125, 1.5380, -0.7233, -1.0734, 0.7212, 0.1241;
    f.var.S = Mat::Zero(2, 4);
    f.var.S(0, 0) = 1.0;
    f.var.S(1, 1) = 1.0;
    weyl::gaussian_term t;
    t.alpha = -1.0;
    t.gamma = Vec::Zero(2);
    t.gamma << 1.0, -0.5;
    t.lambda = 0.5 * Mat::Identity(2, 2);
    f.var.psi = weyl::strength_function::gaussian_mixture({t});
  }
  if (with_upsilon) {
    std::vector<weyl::strength_function> ups;
    for (int k = 0; k < f.mdl.m(); ++k) {
      weyl::gaussian_term t;
      t.alpha = 0.4 * (k + 1);
      t.gamma = Vec::Constant(f.var.S.rows(), 0.3 * k - 0.2);
      t.lambda = (0.8 + 0.2 * k) * Mat::Identity(f.var.S.rows(), f.var.S.rows());
      ups.push_back(weyl::strength_function::gaussian_mixture({t}));
    }
    f.var.upsilon = std::move(ups);
  }
  f.ss = model::build_state_space(f.mdl);
  f.P = gaussian::invariant_covariance(f.ss).P;
  f.ctx = perturb::make_context(f.mdl, f.ss, f.P, f.var);
  f.pair = bounds::find_lyapunov_pair(f.ss);
  return f;
}

}  // namespace

TEST_CASE("lyapunov pair: scalar case, published example, contraction") {
  model::state_space ss;
  ss.A = -Mat::Identity(2, 2);
  const auto pair = bounds::find_lyapunov_pair(ss);
  CHECK(pair.lambda == doctest::Approx(0.9));
  CHECK((pair.gamma - 5.0 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  const fixture f = make_fixture(2);
  CHECK(f.pair.lambda == doctest::Approx(1.3189).epsilon(1e-3));
  Eigen::SelfAdjointEigenSolver<Mat> es(f.pair.gamma);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  const Mat ali = f.ss.A * f.pair.gamma + f.pair.gamma * f.ss.A.transpose() +
                  2.0 * f.pair.lambda * f.pair.gamma;
  Eigen::SelfAdjointEigenSolver<Mat> es2(0.5 * (ali + ali.transpose()));
  CHECK(es2.eigenvalues().maxCoeff() <= 1e-12);

  // contraction |Gamma^{-1/2} e^{tA} Gamma^{1/2}| <= e^{-lambda t}
  const Mat gsqrt = es.operatorSqrt();
  const Mat gisqrt = es.operatorInverseSqrt();
  for (double t : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const Mat m = gisqrt * numerics::matrix_exponential(f.ss.A, t) * gsqrt;
    CHECK(m.jacobiSvd().singularValues()(0) <=
          std::exp(-f.pair.lambda * t) * (1.0 + 1e-10));
  }

  model::state_space unstable;
  unstable.A = Mat::Zero(2, 2);
  CHECK_THROWS_AS(bounds::find_lyapunov_pair(unstable), stability_error);
}

TEST_CASE("tau factor") {
  const fixture f = make_fixture(2);

  // Theta = P makes the ratio identically one
  CHECK(bounds::tau_factor(f.pair, f.P, f.P, f.var.S) == doctest::Approx(1.0).epsilon(1e-12));

  // d = 1 reduces to a scalar ratio
  const Mat gi = f.pair.gamma.llt().solve(Mat::Identity(2, 2));
  const Vec ths = f.mdl.theta * f.var.S.transpose();
  const Vec ps = f.P * f.var.S.transpose();
  const double scalar = std::sqrt((ths.dot(gi * ths)) / (ps.dot(gi * ps)));
  CHECK(bounds::tau_factor(f.pair, f.mdl.theta, f.P, f.var.S) ==
        doctest::Approx(scalar).epsilon(1e-12));

  // d = 2: maximization over random directions never exceeds tau
  const fixture g = make_fixture(4);
  const double tau = bounds::tau_factor(g.pair, g.mdl.theta, g.P, g.var.S);
  const Mat gi4 = g.pair.gamma.llt().solve(Mat::Identity(4, 4));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> dist;
  double best = 0.0;
  for (int k = 0; k < 10000; ++k) {
    Vec w(2);
    w << dist(rng), dist(rng);
    const Vec a = g.mdl.theta * g.var.S.transpose() * w;
    const Vec b = g.P * g.var.S.transpose() * w;
    best = std::max(best, std::sqrt(a.dot(gi4 * a) / b.dot(gi4 * b)));
  }
  CHECK(best <= tau * (1.0 + 1e-9));
  CHECK(best == doctest::Approx(tau).epsilon(1e-3));
}

TEST_CASE("pointwise bounds vanish where the influence functions do") {
  const fixture f = make_fixture(2);
  Vec u(2), w(1);
  u << 0.8, -0.2;
  w << 1.1;
  CHECK(bounds::bound_F(f.pair, f.ctx, Vec::Zero(2), w) == 0.0);
  CHECK(bounds::bound_F(f.pair, f.ctx, u, Vec::Zero(1)) == 0.0);
  CHECK(bounds::bound_G(f.pair, f.ctx, Vec::Zero(2), w) == 0.0);
}

TEST_CASE("bound_G has the correct limit at w = 0") {
  const fixture f = make_fixture(2);
  Vec u(2);
  u << 0.8, -0.2;
  const double at_zero = bounds::bound_G(f.pair, f.ctx, u, Vec::Zero(1));
  const double near_zero = bounds::bound_G(f.pair, f.ctx, u, Vec::Constant(1, 1e-12));
  CHECK(at_zero == doctest::Approx(near_zero).epsilon(1e-9));
  CHECK(at_zero > 0.0);
}

TEST_CASE("influence bounds dominate on both bundled models") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> dist(0.0, 1.2);
  for (int which : {2, 4}) {
    const fixture f = make_fixture(which, /*with_upsilon=*/true);
    for (int k = 0; k < 200; ++k) {
      Vec u(f.ctx.n()), w(f.ctx.d());
      for (int i = 0; i < f.ctx.n(); ++i) u[i] = dist(rng);
      for (int i = 0; i < f.ctx.d(); ++i) w[i] = dist(rng);
      const double fval = std::abs(perturb::influence_F(f.ctx, u, w));
      const double fbnd = bounds::bound_F(f.pair, f.ctx, u, w);
      CHECK(fval <= fbnd + 1e-9 * (1.0 + fbnd));
      const double gval = perturb::influence_G(f.ctx, u, w).norm();
      const double gbnd = bounds::bound_G(f.pair, f.ctx, u, w);
      CHECK(gval <= gbnd + 1e-9 * (1.0 + gbnd));
    }
  }
}

TEST_CASE("bound_F grows along rays once the gaussian factor is divided out") {
  const fixture f = make_fixture(2);
  Vec u(2), w(1);
  u << 0.4, 0.6;
  w << 0.9;
  double prev = 0.0;
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    const Vec us = s * u;
    const Vec v = f.var.S.transpose() * w;
    const double gauss =
        std::exp(-0.5 * (us.dot(f.P * us) + v.dot(f.P * v)));
    const double val = bounds::bound_F(f.pair, f.ctx, us, w) / gauss;
    CHECK(val > prev);
    prev = val;
  }
}

TEST_CASE("mean sensitivity norm: closed form vs quadrature and monte carlo") {
  const fixture f2 = make_fixture(2);

  // d = 1 reduction against direct quadrature
  for (double theta : {0.5, 1.0, 3.0}) {
    const double closed = bounds::mean_sensitivity_norm(f2.ctx, theta);
    const Vec g = f2.ss.A.partialPivLu().solve(f2.mdl.theta * f2.var.S.transpose()).col(0);
    const double p11 = f2.P(0, 0);
    const double quad = std::sqrt(oracles::trapezoid_1d(
        [&](double w) {
          return 4.0 * std::exp(-(p11 + theta) * w * w) * g.squaredNorm() * w * w;
        },
        10.0 / std::sqrt(theta + p11), 40000));
    CHECK(closed == doctest::Approx(quad).epsilon(1e-8));
  }

  // large theta kills the sensitivity
  CHECK(bounds::mean_sensitivity_norm(f2.ctx, 1e8) < 1e-5);

  // two-mode example: monte-carlo evaluation of the defining integral
  const fixture f4 = make_fixture(4);
  const double theta = 1.0;
  const double closed = bounds::mean_sensitivity_norm(f4.ctx, theta);
  const Mat w = theta * Mat::Identity(2, 2) + f4.var.S * f4.P * f4.var.S.transpose();
  const Mat cov = 0.5 * w.llt().solve(Mat::Identity(2, 2));
  numerics::seeded_sampler sampler{99, 5};
  const auto draws = numerics::gaussian_draws(sampler, cov, 200000);
  const Mat core = f4.ss.A.partialPivLu().solve(f4.mdl.theta * f4.var.S.transpose());
  double mean = 0.0, m2 = 0.0;
  std::size_t i = 0;
  for (const Vec& om : draws) {
    const double val = 4.0 * (core * om).squaredNorm();
    ++i;
    const double delta = val - mean;
    mean += delta / static_cast<double>(i);
    m2 += delta * (val - mean);
  }
  const double pref = std::pow(std::numbers::pi, 1.0) / std::sqrt(w.determinant());
  const double est = pref * mean;
  const double se = pref * std::sqrt(m2 / (draws.size() - 1.0) / draws.size());
  CHECK(std::abs(est - closed * closed) <= 3.0 * se);

  // monotone in theta
  double prev = std::numeric_limits<double>::infinity();
  for (double th : {0.5, 1.0, 2.0, 4.0}) {
    const double s = bounds::mean_sensitivity_norm(f4.ctx, th);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("monte-carlo norms: zero coupling variation, determinism, parallel equality") {
  const fixture f = make_fixture(2);
  numerics::seeded_sampler sampler{314, 0};

  // zero-coupling variation: the G estimator is skipped only through M = 0
  fixture zc = make_fixture(2);
  zc.mdl.M.setZero();
  zc.ctx = perturb::make_context(zc.mdl, zc.ss, zc.P, zc.var);
  const auto zero_g = bounds::mc_norm_bounds(zc.pair, zc.ctx, 1.0, sampler, 20000);
  CHECK(zero_g.g_norm.value == 0.0);
  CHECK(zero_g.g_norm.std_error == 0.0);

  const auto a = bounds::mc_norm_bounds(f.pair, f.ctx, 1.0, sampler, 50000);
  const auto b = bounds::mc_norm_bounds(f.pair, f.ctx, 1.0, sampler, 50000);
  CHECK(a.f_norm.value == b.f_norm.value);
  CHECK(a.g_norm.std_error == b.g_norm.std_error);
  const auto serial =
      bounds::mc_norm_bounds(f.pair, f.ctx, 1.0, sampler, 50000, exec_policy::serial);
  CHECK(serial.f_norm.value == a.f_norm.value);
  CHECK(serial.g_norm.value == a.g_norm.value);

  // the one-mode example at theta = 1 has a divergent theoretical mean
  CHECK(a.divergence_warning);
}

TEST_CASE("monte-carlo norms obey the root-n law where the variance is finite") {
  const fixture f = make_fixture(2);
  const double theta = 100.0;  // tames the tails: q << 1/4
  numerics::seeded_sampler s1{7, 1}, s2{7, 2};
  const auto half = bounds::mc_norm_bounds(f.pair, f.ctx, theta, s1, 100000);
  const auto full = bounds::mc_norm_bounds(f.pair, f.ctx, theta, s2, 200000);
  CHECK_FALSE(half.divergence_warning);
  const double ratio = full.f_norm.std_error_sq / half.f_norm.std_error_sq;
  CHECK(ratio > 0.6);
  CHECK(ratio < 0.85);
}

TEST_CASE("monte-carlo F bound dominates a direct grid quadrature of the norm") {
  const fixture f = make_fixture(2);
  numerics::seeded_sampler sampler{2718, 0};
  const auto mc = bounds::mc_norm_bounds(f.pair, f.ctx, 1.0, sampler, 100000);

  // coarse (u, w) grid quadrature of int |F|^2 e^{-theta |w|^2}
  const auto urule = numerics::gauss_legendre(20, -5.0, 5.0);
  const auto wrule = numerics::gauss_legendre(20, -4.0, 4.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < urule.nodes.size(); ++i)
    for (std::size_t j = 0; j < urule.nodes.size(); ++j) {
      Vec u(2);
      u << urule.nodes[i], urule.nodes[j];
      for (std::size_t k = 0; k < wrule.nodes.size(); ++k) {
        const Vec w = Vec::Constant(1, wrule.nodes[k]);
        const double fv = perturb::influence_F(f.ctx, u, w);
        acc += urule.weights[i] * urule.weights[j] * wrule.weights[k] * fv * fv *
               std::exp(-1.0 * w.squaredNorm());
      }
    }
  CHECK(mc.f_norm.mean_sq >= acc);
}

TEST_CASE("hilbert-schmidt bound composition") {
  CHECK(bounds::hs_qcf_bound(0.0, 0.0, 0.0, 0.0) == 0.0);
  CHECK(bounds::hs_qcf_bound(3.0, 4.0, 1.0, 0.0) == doctest::Approx(5.0));
  // homogeneity: doubling both strength norms doubles the bound
  CHECK(bounds::hs_qcf_bound(3.0, 4.0, 2.0, 2.0) ==
        doctest::Approx(2.0 * bounds::hs_qcf_bound(3.0, 4.0, 1.0, 1.0)));
}

TEST_CASE("hs bound dominates the sampled correction norm") {
  const fixture f = make_fixture(2);
  numerics::seeded_sampler sampler{11, 0};
  const double theta = 0.1;  // must stay below Lambda = 0.1589
  const auto mc = bounds::mc_norm_bounds(f.pair, f.ctx, theta, sampler, 100000);
  const double psi_norm = weyl::weighted_norm(f.ctx.variation.psi, theta);
  const double hs = bounds::hs_qcf_bound(mc.f_norm.value, mc.g_norm.value, psi_norm, 0.0);

  const auto grid = spectral::default_grid(f.P, 128);
  const auto field = spectral::sample_qcf_correction(f.ctx, grid);
  double l2 = 0.0;
  for (const auto& v : field.cvalues) l2 += std::norm(v);
  l2 = std::sqrt(l2 * field.cell_volume());
  CHECK(hs >= l2);
}

TEST_CASE("sensitivity report: determinism and monotone entries") {
  const fixture f = make_fixture(4);
  numerics::seeded_sampler sampler{123, 0};
  const std::vector<double> thetas{0.5, 1.0, 2.0, 4.0};
  const auto rep = bounds::run_sensitivity(f.ctx, f.pair, thetas, sampler, 20000);
  const auto rep2 = bounds::run_sensitivity(f.ctx, f.pair, thetas, sampler, 20000);
  REQUIRE(rep.entries.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rep.entries[i].mc_norm_f.value == rep2.entries[i].mc_norm_f.value);
    if (i) CHECK(rep.entries[i].mean_sensitivity <= rep.entries[i - 1].mean_sensitivity);
  }
  CHECK(rep.lambda == f.pair.lambda);
}
