#include "oqho/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace oqho::numerics {

void require_finite(const Mat& a, const char* what) {
  if (!a.allFinite()) throw invalid_input(std::string(what) + " has non-finite entries");
}

double spectral_abscissa(const Mat& a) {
  Eigen::EigenSolver<Mat> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

bool hurwitz(const Mat& a) { return spectral_abscissa(a) < -hurwitz_margin; }

Mat matrix_exponential(const Mat& a, double t) {
  require_finite(a, "matrix_exponential input");
  if (!std::isfinite(t)) throw invalid_input("matrix_exponential: non-finite time");
  const int n = static_cast<int>(a.rows());
  if (n != a.cols() || n < 1) throw invalid_input("matrix_exponential: square matrix required");

  Mat m = t * a;
  // Pade-13 is accurate for ||M||_1 <= theta13; scale down by powers of two otherwise.
  static constexpr double theta13 = 5.371920351148152;
  static constexpr double b[14] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    m /= std::ldexp(1.0, squarings);
  }

  const Mat ident = Mat::Identity(n, n);
  const Mat m2 = m * m;
  const Mat m4 = m2 * m2;
  const Mat m6 = m4 * m2;
  Mat u = m * (m6 * (b[13] * m6 + b[11] * m4 + b[9] * m2) +
               b[7] * m6 + b[5] * m4 + b[3] * m2 + b[1] * ident);
  Mat v = m6 * (b[12] * m6 + b[10] * m4 + b[8] * m2) +
          b[6] * m6 + b[4] * m4 + b[2] * m2 + b[0] * ident;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

namespace {

Mat kronecker(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

lyapunov_solver::lyapunov_solver(const Mat& a) : n_(static_cast<int>(a.rows())) {
  require_finite(a, "lyapunov_solver A");
  if (a.rows() != a.cols()) throw invalid_input("lyapunov_solver: square A required");
  if (!hurwitz(a)) throw stability_error("lyapunov_solver: A is not Hurwitz");
  const Mat ident = Mat::Identity(n_, n_);
  Mat k = kronecker(ident, a) + kronecker(a, ident);
  q_scale_ = k.cwiseAbs().maxCoeff();
  lu_.compute(k);
}

Mat lyapunov_solver::solve(const Mat& q) const {
  if (q.rows() != n_ || q.cols() != n_) throw invalid_input("lyapunov_solver: Q dimension mismatch");
  Eigen::Map<const Vec> qv(q.data(), n_ * n_);
  Vec xv = lu_.solve(-qv);
  if (!xv.allFinite()) throw numerical_error("lyapunov_solver: singular Kronecker system");
  Mat x = Eigen::Map<const Mat>(xv.data(), n_, n_);
  return 0.5 * (x + x.transpose());
}

Mat solve_lyapunov(const Mat& a, const Mat& q) {
  require_finite(q, "solve_lyapunov Q");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.cwiseAbs().maxCoeff()))
    throw invalid_input("solve_lyapunov: Q must be symmetric");
  return lyapunov_solver(a).solve(0.5 * (q + q.transpose()));
}

Mat solve_shifted_lyapunov(const Mat& a, double lambda) {
  if (!(lambda > 0.0)) throw invalid_input("solve_shifted_lyapunov: lambda must be positive");
  const Mat shifted = a + lambda * Mat::Identity(a.rows(), a.cols());
  if (!hurwitz(shifted))
    throw stability_error("solve_shifted_lyapunov: shift too large, A + lambda I not Hurwitz");
  return lyapunov_solver(shifted).solve(Mat::Identity(a.rows(), a.cols()));
}

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// mu0 * (first eigenvector component)^2.  Nodes are mirrored afterwards so
// the +/- pairing is exact, which downstream symmetry arguments rely on.
quadrature_rule golub_welsch(int order, const Vec& offdiag, double mu0,
                             quadrature_rule::family fam) {
  Mat jacobi = Mat::Zero(order, order);
  for (int k = 0; k + 1 < order; ++k) {
    jacobi(k, k + 1) = offdiag[k];
    jacobi(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
  quadrature_rule rule;
  rule.kind = fam;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  for (int i = 0, j = order - 1; i < j; ++i, --j) {
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.weights[i] = w;
    rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace

quadrature_rule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw invalid_input("gauss_legendre: order must be >= 1");
  if (!(a < b)) throw invalid_input("gauss_legendre: require a < b");
  Vec off(order > 1 ? order - 1 : 0);
  for (int k = 1; k < order; ++k)
    off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  quadrature_rule rule = golub_welsch(order, off, 2.0, quadrature_rule::family::gauss_legendre);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

quadrature_rule gauss_hermite(int order) {
  if (order < 1) throw invalid_input("gauss_hermite: order must be >= 1");
  Vec off(order > 1 ? order - 1 : 0);
  for (int k = 1; k < order; ++k) off[k - 1] = std::sqrt(0.5 * k);
  return golub_welsch(order, off, std::sqrt(std::numbers::pi),
                      quadrature_rule::family::gauss_hermite);
}

namespace {

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

std::uint64_t seeded_sampler::bits(std::uint64_t index) const {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL;
  x = mix64(x ^ mix64(stream + 0xd1b54a32d192ed03ULL));
  return mix64(x ^ mix64(index + 0x8cb92ba72f3d8dd7ULL));
}

double seeded_sampler::uniform(std::uint64_t index) const {
  return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
}

double seeded_sampler::normal(std::uint64_t index) const {
  const double u1 = uniform(2 * index);
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<Vec> gaussian_draws(const seeded_sampler& sampler, const Mat& covariance,
                                std::size_t count) {
  require_finite(covariance, "gaussian_draws covariance");
  const Eigen::Index n = covariance.rows();
  if (covariance.cols() != n) throw invalid_input("gaussian_draws: covariance must be square");
  Eigen::LLT<Mat> llt(0.5 * (covariance + covariance.transpose()));
  if (llt.info() != Eigen::Success)
    throw numerical_error("gaussian_draws: covariance is not positive definite");
  const Mat l = llt.matrixL();
  std::vector<Vec> out;
  out.reserve(count);
  Vec z(n);
  for (std::size_t i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < n; ++j)
      z[j] = sampler.normal(i * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(j));
    out.push_back(l * z);
  }
  return out;
}

}  // namespace oqho::numerics
