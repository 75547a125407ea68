#include "oracles.hpp"

#include <cmath>
#include <random>

namespace oqho::oracles {

Mat series_expm(const Mat& a, double t, int terms) {
  const Mat m = t * a;
  Mat term = Mat::Identity(a.rows(), a.cols());
  Mat acc = term;
  for (int k = 1; k <= terms; ++k) {
    term = (term * m) / static_cast<double>(k);
    acc += term;
  }
  return acc;
}

Mat gramian_quadrature(const Mat& a, const Mat& q, double horizon, int steps) {
  // composite Simpson over [0, horizon]; e^{tA} advanced incrementally so the
  // series stays in its small-argument regime
  if (steps % 2) ++steps;
  const double h = horizon / steps;
  const Mat step = series_expm(a, h, 40);
  Mat e = Mat::Identity(a.rows(), a.cols());
  Mat acc = Mat::Zero(a.rows(), a.cols());
  for (int i = 0; i <= steps; ++i) {
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * (e * q * e.transpose());
    e = e * step;
  }
  return (h / 3.0) * acc;
}

namespace {

// incremental e^{tA} walker shared by the Riemann oracles
template <typename Fn>
void walk_exponential(const Mat& a, double h, double horizon, Fn&& per_step) {
  const Mat step = series_expm(a, h, 40);
  Mat e = Mat::Identity(a.rows(), a.cols());
  const int n_steps = static_cast<int>(horizon / h);
  for (int i = 0; i <= n_steps; ++i) {
    per_step(i, n_steps, e);
    e = e * step;
  }
}

}  // namespace

double influence_F_riemann(const Mat& a, const Mat& p, const Mat& theta, const Mat& s,
                           const Vec& u, const Vec& w, double h, double horizon) {
  const Vec v = s.transpose() * w;
  const Vec pv = p * v;
  const Vec tv = theta * v;
  double acc = 0.0;
  walk_exponential(a, h, horizon, [&](int i, int n_steps, const Mat& e) {
    const Vec eu = e.transpose() * u;
    const double val = -std::exp(-eu.dot(pv)) * std::sin(eu.dot(tv));
    acc += (i == 0 || i == n_steps) ? 0.5 * val : val;
  });
  return 2.0 * std::exp(-0.5 * (u.dot(p * u) + v.dot(p * v))) * h * acc;
}

CVec influence_G_riemann(const Mat& a, const Mat& p, const Mat& theta, const Mat& s,
                         const Mat& m, const Mat& j, const Vec& u, const Vec& w, double h,
                         double horizon) {
  const Vec v = s.transpose() * w;
  const Vec pv = p * v;
  const Vec tv = theta * v;
  const Mat d = m * theta - j * m * p;
  const Mat mth = m * theta;
  Vec acc = Vec::Zero(m.rows());
  walk_exponential(a, h, horizon, [&](int i, int n_steps, const Mat& e) {
    const Vec eu = e.transpose() * u;
    const double ph = eu.dot(tv);
    const Vec val = std::exp(-eu.dot(pv)) *
                    (std::sin(ph) * (d * (eu + v)) +
                     (std::sin(ph) * Mat::Identity(m.rows(), m.rows()) + std::cos(ph) * j) *
                         (mth * eu));
    acc += (i == 0 || i == n_steps) ? 0.5 * val : val;
  });
  const double pref = std::exp(-0.5 * (u.dot(p * u) + v.dot(p * v)));
  return cplx(0.0, -2.0 * pref * h) * acc.cast<cplx>();
}

Vec mean_correction_closed_form(const Mat& a, const Mat& p, const Mat& theta, const Mat& s,
                                const weyl::gaussian_term& term) {
  const double lambda = term.lambda(0, 0);
  const double gamma = term.gamma[0];
  const double xi = (s * p * s.transpose())(0, 0) + lambda;
  const double scale = -2.0 * term.alpha * (gamma / xi) * std::sqrt(lambda / xi) *
                       std::exp(-gamma * gamma / (2.0 * xi));
  return scale * a.partialPivLu().solve(theta * s.transpose()).col(0);
}

model::oqho_model random_model(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  model::oqho_model mdl;
  mdl.theta = model::ccr_position_momentum(n);
  Mat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) r(i, k) = dist(rng);
  mdl.R = 0.5 * (r + r.transpose());
  mdl.M.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < n; ++k) mdl.M(i, k) = dist(rng);
  return mdl;
}

model::oqho_model random_stable_model(int n, int m, std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 256; ++attempt) {
    model::oqho_model mdl = random_model(n, m, seed + 7919 * attempt);
    const auto ss = model::build_state_space(mdl);
    if (model::is_hurwitz(ss.A).hurwitz) return mdl;
  }
  throw std::runtime_error("random_stable_model: no Hurwitz sample found");
}

double trapezoid_1d(const std::function<double(double)>& f, double w_max, int steps) {
  const double h = 2.0 * w_max / steps;
  double acc = 0.5 * (f(-w_max) + f(w_max));
  for (int i = 1; i < steps; ++i) acc += f(-w_max + i * h);
  return h * acc;
}

}  // namespace oqho::oracles
