#pragma once

#include "oqho/perturb.hpp"
#include "oqho/spectral.hpp"

namespace oqho::bounds {

using spectral::exec_policy;

/// Decay certificate: A Gamma + Gamma A^T + 2 lambda Gamma <= 0 with
/// Gamma > 0, equivalent to |Gamma^{-1/2} e^{tA} Gamma^{1/2}| <= e^{-lambda t}.
struct lyapunov_pair {
  double lambda;
  Mat gamma;
};

lyapunov_pair find_lyapunov_pair(const model::state_space& ss, double fraction = 0.9);

/// tau = sqrt(max generalized eigenvalue of the pencil
/// (S Theta' Gamma^{-1} Theta S', S P Gamma^{-1} P S')); the largest ratio
/// |Theta S'w|_{Gamma^{-1}} / |P S'w|_{Gamma^{-1}} over w != 0.
double tau_factor(const lyapunov_pair& pair, const Mat& theta, const Mat& p, const Mat& s);

/// Pointwise upper bound on |F(u, w)|.
double bound_F(const lyapunov_pair& pair, const perturb::perturbation_context& ctx,
               const Vec& u, const Vec& w);

/// Pointwise upper bound on |G(u, w)|_2; finite limit at w = 0.
double bound_G(const lyapunov_pair& pair, const perturb::perturbation_context& ctx,
               const Vec& u, const Vec& w);

/// Closed-form weighted norm of the Frechet derivative of the mean correction
/// with respect to Psi.
double mean_sensitivity_norm(const perturb::perturbation_context& ctx, double theta_weight);

struct mc_estimate {
  double value = 0.0;      // estimate of the weighted norm (not squared)
  double std_error = 0.0;  // propagated standard error of `value`
  double mean_sq = 0.0;    // estimate of the squared norm
  double std_error_sq = 0.0;
};

struct mc_norms {
  mc_estimate f_norm;
  mc_estimate g_norm;
  bool divergence_warning = false;  // theoretical expectation is infinite
  std::uint64_t count = 0;
};

/// Monte-Carlo estimates of the weighted Hilbert-Schmidt ingredients
/// |||F|||_{-theta} and |||G|||_{-theta} (upper-bound estimators).
/// Deterministic per (sampler, count); aggregation is block-wise so the
/// result is independent of thread count.
mc_norms mc_norm_bounds(const lyapunov_pair& pair, const perturb::perturbation_context& ctx,
                        double theta_weight, const numerics::seeded_sampler& sampler,
                        std::uint64_t count, exec_policy policy = exec_policy::parallel);

/// sqrt(fF^2 + G^2) * sqrt(|||Psi|||^2 + |||Upsilon|||^2).
double hs_qcf_bound(double mc_norm_f, double mc_norm_g, double psi_norm, double upsilon_norm);

struct theta_entry {
  double theta = 0.0;
  double mean_sensitivity = 0.0;
  mc_estimate mc_norm_f;
  mc_estimate mc_norm_g;
  bool divergence_warning = false;
  double psi_norm = 0.0;
  double upsilon_norm = 0.0;
  bool strength_norm_divergent = false;
  double hs_bound = 0.0;       // on |Phi~|_2
  double hs_bound_qpdf = 0.0;  // scaled by (2 pi)^{-n/2}
};

struct sensitivity_report {
  double lambda = 0.0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t sample_count = 0;
  std::vector<theta_entry> entries;
};

sensitivity_report run_sensitivity(const perturb::perturbation_context& ctx,
                                   const lyapunov_pair& pair,
                                   const std::vector<double>& theta_weights,
                                   const numerics::seeded_sampler& sampler,
                                   std::uint64_t count,
                                   exec_policy policy = exec_policy::parallel);

}  // namespace oqho::bounds
