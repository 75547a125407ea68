#pragma once

#include <memory>
#include <optional>

#include "oqho/gaussian.hpp"
#include "oqho/weyl.hpp"

namespace oqho::perturb {

/// Quadrature for int_0^inf: substitute z = e^{-lambda0 t} with
/// lambda0 = lambda_fraction * |spectral abscissa|, then composite
/// Gauss-Legendre on geometric panels of (0, 1].
struct time_rule {
  double lambda_fraction = 0.9;
  int panels = 24;
  int order = 12;
};

/// Tensor Gauss-Hermite in w after affine standardization against the
/// Gaussian factor e^{-0.5 w' (S P S' + Lambda) w}.
struct w_rule {
  int order = 40;  // per dimension; d >= 3 is downgraded to 24 with a warning
};

class perturbation_context {
 public:
  model::state_space ss;
  Mat theta;
  Mat P;
  Mat M;
  Mat D;  // M Theta - J M P
  weyl::weyl_variation variation;
  time_rule trule;
  w_rule wrule;

  double abscissa = 0.0;  // |max Re eig A|
  double lambda0 = 0.0;

  std::vector<double> t_nodes;
  std::vector<double> t_weights;
  std::vector<Mat> exp_ta;  // e^{t_i A}
  int tail_begin = 0;       // first node index of the last panel

  // Products reused by every evaluation.
  Mat SP;   // S P
  Mat STh;  // S Theta^T
  Mat DS;   // D S^T
  Mat SDt;  // S D^T
  Mat MJ;   // M^T J
  Mat MTh;  // M Theta

  /// Gauss-Hermite nodes mapped to w space; the Gaussian factor
  /// e^{-0.5 w' Xi w} is folded into the weights.
  struct w_block {
    std::vector<Vec> nodes;
    std::vector<double> weights;
  };
  w_block base_block;                // Xi0 = S P S^T
  std::vector<w_block> psi_blocks;   // per mixture term: Xi0 + Lambda_j
  std::vector<std::vector<w_block>> upsilon_blocks;  // [channel][term]

  const numerics::lyapunov_solver& ale() const;
  int n() const { return ss.n(); }
  int m() const { return ss.m(); }
  int d() const { return variation.d(); }

 private:
  friend perturbation_context make_context(const model::oqho_model&, const model::state_space&,
                                           const Mat&, const weyl::weyl_variation&, time_rule,
                                           w_rule);
  mutable std::shared_ptr<numerics::lyapunov_solver> ale_;
};

perturbation_context make_context(const model::oqho_model& mdl, const model::state_space& ss,
                                  const Mat& P, const weyl::weyl_variation& variation,
                                  time_rule tr = {}, w_rule wr = {});

/// F(u, w) of the first-order response: real-valued influence kernel of the
/// Hamiltonian strength function.
double influence_F(const perturbation_context& ctx, const Vec& u, const Vec& w);

/// G(u, w): complex m-vector influence kernel of the coupling strengths.
CVec influence_G(const perturbation_context& ctx, const Vec& u, const Vec& w);

/// Steady-state first-order QCF correction
/// int (F(u,w) Psi(w) + G(u,w)^* Upsilon(w)) dw.
cplx qcf_correction(const perturbation_context& ctx, const Vec& u);

/// Closed-form route for a single Gaussian Psi term with Upsilon = 0.
cplx qcf_correction_gaussian_bump(const perturbation_context& ctx, const Vec& u);

/// First-order correction of the invariant mean vector.
Vec mean_correction(const perturbation_context& ctx);

/// First-order correction of the invariant second-moment matrix.
Mat second_moment_correction(const perturbation_context& ctx);

/// The perturbation generator applied to the nominal invariant QCF.
cplx apply_perturbation_operator(const perturbation_context& ctx, const Vec& u);

/// Finite-horizon correction from the nominal invariant initial state;
/// converges to qcf_correction as t grows.
cplx transient_qcf_correction(const perturbation_context& ctx, double t, const Vec& u);

}  // namespace oqho::perturb
