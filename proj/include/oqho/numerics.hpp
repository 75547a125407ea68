#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "oqho/errors.hpp"

namespace oqho {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

namespace numerics {

/// e^{tA} by scaling-and-squaring with the order-13 diagonal Pade approximant.
Mat matrix_exponential(const Mat& a, double t = 1.0);

/// Reusable solver for A X + X A^T + Q = 0 with a fixed Hurwitz A.
/// Dense Kronecker vectorization; the n^2 x n^2 factorization is cached so
/// repeated right-hand sides (per quadrature node) cost one substitution each.
class lyapunov_solver {
 public:
  explicit lyapunov_solver(const Mat& a);
  Mat solve(const Mat& q) const;
  int order() const { return n_; }

 private:
  int n_;
  double q_scale_;
  Eigen::PartialPivLU<Mat> lu_;
};

/// Solves A X + X A^T + Q = 0 for Hurwitz A and symmetric Q.
Mat solve_lyapunov(const Mat& a, const Mat& q);

/// Solves (A + lambda I) G + G (A + lambda I)^T = -I, so that
/// A G + G A^T + 2 lambda G = -I <= 0.  Requires A + lambda I Hurwitz.
Mat solve_shifted_lyapunov(const Mat& a, double lambda);

struct quadrature_rule {
  enum class family { gauss_legendre, gauss_hermite };
  family kind;
  std::vector<double> nodes;
  std::vector<double> weights;
};

quadrature_rule gauss_legendre(int order, double a, double b);

/// Nodes/weights for weight e^{-x^2} on the real line.
quadrature_rule gauss_hermite(int order);

/// Counter-based generator: draw i is a pure function of (seed, stream, i),
/// so any sample is computable without generating its predecessors.
struct seeded_sampler {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::uint64_t bits(std::uint64_t index) const;
  double uniform(std::uint64_t index) const;  // in (0, 1)
  double normal(std::uint64_t index) const;   // standard Gaussian
};

/// `count` draws from N(0, covariance); deterministic in (seed, stream).
std::vector<Vec> gaussian_draws(const seeded_sampler& sampler,
                                const Mat& covariance, std::size_t count);

/// Largest real part over the spectrum.
double spectral_abscissa(const Mat& a);

/// All eigenvalue real parts below -1e-10.
bool hurwitz(const Mat& a);

inline constexpr double hurwitz_margin = 1e-10;

void require_finite(const Mat& a, const char* what);

}  // namespace numerics
}  // namespace oqho
