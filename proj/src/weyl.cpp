#include "oqho/weyl.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace oqho::weyl {

namespace nm = numerics;

// ---------------------------------------------------------------------------
// tabulated grids

cplx tabulated_grid::interpolate(const Vec& w) const {
  const int dd = d();
  std::vector<int> lo(dd);
  std::vector<double> frac(dd);
  for (int k = 0; k < dd; ++k) {
    const auto& ax = axes[k];
    if (w[k] < ax.front() || w[k] > ax.back()) return {0.0, 0.0};
    auto it = std::upper_bound(ax.begin(), ax.end(), w[k]);
    int hi = static_cast<int>(it - ax.begin());
    if (hi == 0) hi = 1;
    if (hi == static_cast<int>(ax.size())) hi = static_cast<int>(ax.size()) - 1;
    lo[k] = hi - 1;
    const double span = ax[hi] - ax[lo[k]];
    frac[k] = span > 0.0 ? (w[k] - ax[lo[k]]) / span : 0.0;
  }
  cplx acc{0.0, 0.0};
  const int corners = 1 << dd;
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::size_t flat = 0;
    for (int k = 0; k < dd; ++k) {
      const int bit = (c >> k) & 1;
      weight *= bit ? frac[k] : 1.0 - frac[k];
      flat = flat * axes[k].size() + static_cast<std::size_t>(lo[k] + bit);
    }
    acc += weight * values[flat];
  }
  return acc;
}

namespace {

std::size_t flat_index(const tabulated_grid& g, const std::vector<int>& idx) {
  std::size_t flat = 0;
  for (int k = 0; k < g.d(); ++k) flat = flat * g.axes[k].size() + static_cast<std::size_t>(idx[k]);
  return flat;
}

// Averages f(w) with conj(f(-w)); axes must be closed under negation.
void hermitian_symmetrize(tabulated_grid& g) {
  const int dd = g.d();
  for (int k = 0; k < dd; ++k) {
    const auto& ax = g.axes[k];
    for (double x : ax) {
      auto it = std::lower_bound(ax.begin(), ax.end(), -x);
      if (it == ax.end() || std::abs(*it + x) > 1e-12 * (1.0 + std::abs(x)))
        throw invalid_input("tabulated strength function: grid axes must be symmetric about 0");
    }
  }
  std::vector<int> idx(dd, 0), mirror(dd);
  const std::size_t total = g.values.size();
  std::vector<cplx> sym(total);
  double dev = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int k = dd - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(rem % g.axes[k].size());
      rem /= g.axes[k].size();
    }
    for (int k = 0; k < dd; ++k) {
      const auto& ax = g.axes[k];
      const double target = -ax[idx[k]];
      mirror[k] = static_cast<int>(std::lower_bound(ax.begin(), ax.end(), target - 1e-12) -
                                   ax.begin());
    }
    const cplx partner = std::conj(g.values[flat_index(g, mirror)]);
    dev = std::max(dev, 0.5 * std::abs(g.values[flat] - partner));
    sym[flat] = 0.5 * (g.values[flat] + partner);
  }
  g.values = std::move(sym);
  g.symmetrization_deviation = dev;
}

}  // namespace

// ---------------------------------------------------------------------------
// strength_function

strength_function strength_function::zero(int d) {
  strength_function f;
  f.kind_ = kind::zero;
  f.d_ = d;
  return f;
}

strength_function strength_function::gaussian_mixture(std::vector<gaussian_term> terms) {
  if (terms.empty()) throw invalid_input("gaussian_mixture: at least one term required");
  strength_function f;
  f.kind_ = kind::gaussian_mixture;
  f.d_ = static_cast<int>(terms.front().gamma.size());
  for (const auto& t : terms) {
    if (t.gamma.size() != f.d_ || t.lambda.rows() != f.d_ || t.lambda.cols() != f.d_)
      throw invalid_input("gaussian_mixture: inconsistent term dimensions");
    if (!std::isfinite(t.alpha) || !t.gamma.allFinite() || !t.lambda.allFinite())
      throw invalid_input("gaussian_mixture: non-finite term");
    Eigen::LLT<Mat> llt(0.5 * (t.lambda + t.lambda.transpose()));
    if (llt.info() != Eigen::Success)
      throw invalid_input("gaussian_mixture: Lambda must be positive definite");
  }
  f.terms_ = std::move(terms);
  return f;
}

strength_function strength_function::tabulated(tabulated_grid grid) {
  if (grid.d() < 1) throw invalid_input("tabulated: empty grid");
  std::size_t expect = 1;
  for (const auto& ax : grid.axes) {
    if (ax.size() < 2) throw invalid_input("tabulated: each axis needs >= 2 samples");
    if (!std::is_sorted(ax.begin(), ax.end()))
      throw invalid_input("tabulated: axis coordinates must be sorted");
    expect *= ax.size();
  }
  if (grid.values.size() != expect)
    throw invalid_input("tabulated: value count does not fill the tensor grid");
  hermitian_symmetrize(grid);
  strength_function f;
  f.kind_ = kind::tabulated;
  f.d_ = grid.d();
  f.grid_ = std::move(grid);
  return f;
}

cplx strength_function::operator()(const Vec& w) const {
  if (w.size() != d_) throw invalid_input("strength_function: argument dimension mismatch");
  switch (kind_) {
    case kind::zero:
      return {0.0, 0.0};
    case kind::gaussian_mixture: {
      cplx acc{0.0, 0.0};
      for (const auto& t : terms_) {
        const double quad = 0.5 * w.dot(t.lambda * w);
        const double coef = t.alpha * std::sqrt(t.lambda.determinant()) /
                            std::pow(2.0 * std::numbers::pi, 0.5 * d_);
        acc += coef * std::exp(cplx(-quad, -w.dot(t.gamma)));
      }
      return acc;
    }
    case kind::tabulated:
      return grid_.interpolate(w);
  }
  return {0.0, 0.0};
}

bool strength_function::is_zero() const {
  if (kind_ == kind::zero) return true;
  if (kind_ == kind::gaussian_mixture)
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const gaussian_term& t) { return t.alpha == 0.0; });
  return false;
}

strength_function strength_function::scaled(double c) const {
  strength_function f = *this;
  if (kind_ == kind::gaussian_mixture)
    for (auto& t : f.terms_) t.alpha *= c;
  else if (kind_ == kind::tabulated)
    for (auto& v : f.grid_.values) v *= c;
  return f;
}

strength_function operator+(const strength_function& a, const strength_function& b) {
  if (a.d_ != b.d_) throw invalid_input("strength_function sum: dimension mismatch");
  if (a.kind_ == strength_function::kind::zero) return b;
  if (b.kind_ == strength_function::kind::zero) return a;
  if (a.kind_ == strength_function::kind::gaussian_mixture &&
      b.kind_ == strength_function::kind::gaussian_mixture) {
    std::vector<gaussian_term> terms = a.terms_;
    terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
    return strength_function::gaussian_mixture(std::move(terms));
  }
  throw unsupported_representation("strength_function sum: incompatible representations");
}

strength_function load_tabulated_csv(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw invalid_input("load_tabulated_csv: cannot open " + path);
  struct row {
    std::vector<double> w;
    cplx v;
  };
  std::vector<row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> nums;
    while (std::getline(ss, cell, ',')) nums.push_back(std::stod(cell));
    if (static_cast<int>(nums.size()) != d + 2)
      throw invalid_input("load_tabulated_csv: expected w_1..w_" + std::to_string(d) +
                          ",re,im per row");
    row r;
    r.w.assign(nums.begin(), nums.begin() + d);
    r.v = cplx(nums[d], nums[d + 1]);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw invalid_input("load_tabulated_csv: no data rows in " + path);

  tabulated_grid g;
  g.axes.resize(d);
  for (int k = 0; k < d; ++k) {
    std::vector<double> ax;
    for (const auto& r : rows) ax.push_back(r.w[k]);
    std::sort(ax.begin(), ax.end());
    ax.erase(std::unique(ax.begin(), ax.end(),
                         [](double x, double y) { return std::abs(x - y) < 1e-12; }),
             ax.end());
    g.axes[k] = std::move(ax);
  }
  std::size_t total = 1;
  for (const auto& ax : g.axes) total *= ax.size();
  if (rows.size() != total)
    throw invalid_input("load_tabulated_csv: rows do not form a full tensor grid");
  g.values.assign(total, cplx{0.0, 0.0});
  for (const auto& r : rows) {
    std::vector<int> idx(d);
    for (int k = 0; k < d; ++k) {
      const auto& ax = g.axes[k];
      idx[k] = static_cast<int>(std::lower_bound(ax.begin(), ax.end(), r.w[k] - 1e-12) -
                                ax.begin());
    }
    g.values[flat_index(g, idx)] = r.v;
  }
  return strength_function::tabulated(std::move(g));
}

// ---------------------------------------------------------------------------
// weyl_variation

bool weyl_variation::upsilon_is_zero() const {
  return std::all_of(upsilon.begin(), upsilon.end(),
                     [](const strength_function& f) { return f.is_zero(); });
}

void weyl_variation::validate(int n, int m) const {
  if (S.cols() != n) throw invalid_input("variation: S must have n columns");
  const int dd = d();
  if (dd < 1 || dd > n) throw invalid_input("variation: need 1 <= d <= n rows in S");
  std::vector<bool> used(n, false);
  for (int i = 0; i < dd; ++i) {
    int ones = 0, col = -1;
    for (int j = 0; j < n; ++j) {
      const double s = S(i, j);
      if (s == 1.0) {
        ++ones;
        col = j;
      } else if (s != 0.0) {
        throw invalid_input("variation: S entries must be 0 or 1");
      }
    }
    if (ones != 1) throw invalid_input("variation: each S row must select exactly one variable");
    if (used[col]) throw invalid_input("variation: S rows must select distinct variables");
    used[col] = true;
  }
  if (psi.dim() != dd) throw invalid_input("variation: psi dimension must match S");
  if (!upsilon.empty() && static_cast<int>(upsilon.size()) != m)
    throw invalid_input("variation: upsilon must have one entry per field channel");
  for (const auto& f : upsilon)
    if (f.dim() != dd) throw invalid_input("variation: upsilon dimension must match S");
}

cplx eval_psi(const weyl_variation& variation, const Vec& w) { return variation.psi(w); }

CVec eval_upsilon(const weyl_variation& variation, const Vec& w, int m) {
  CVec out = CVec::Zero(m);
  for (std::size_t k = 0; k < variation.upsilon.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = variation.upsilon[k](w);
  return out;
}

// ---------------------------------------------------------------------------
// norms

namespace {

int norm_order(int d) { return d <= 2 ? 40 : 24; }

// int exp(-i w.delta - 0.5 w^T G w) dw via Gauss-Hermite after the square is
// completed; G must be positive definite.
double oscillatory_gaussian_integral(const Mat& g, const Vec& delta) {
  const int d = static_cast<int>(g.rows());
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success)
    throw divergence_error("weighted_norm: weight exceeds Gaussian decay");
  const Mat l = llt.matrixL();
  const double jac = std::pow(2.0, 0.5 * d) / l.diagonal().prod();
  const auto rule = nm::gauss_hermite(norm_order(d));
  const int order = static_cast<int>(rule.nodes.size());
  std::vector<int> idx(d, 0);
  double acc = 0.0;
  while (true) {
    double wq = 1.0;
    Vec x(d);
    for (int k = 0; k < d; ++k) {
      x[k] = rule.nodes[idx[k]];
      wq *= rule.weights[idx[k]];
    }
    const Vec w = std::sqrt(2.0) * l.transpose().template triangularView<Eigen::Upper>().solve(x);
    acc += wq * std::cos(w.dot(delta));
    int k = 0;
    while (k < d && ++idx[k] == order) idx[k++] = 0;
    if (k == d) break;
  }
  return jac * acc;
}

}  // namespace

double weighted_norm(const strength_function& f, double theta_weight) {
  if (!std::isfinite(theta_weight)) throw invalid_input("weighted_norm: non-finite theta");
  const int d = f.dim();
  switch (f.type()) {
    case strength_function::kind::zero:
      return 0.0;
    case strength_function::kind::gaussian_mixture: {
      for (const auto& t : f.terms()) {
        Eigen::SelfAdjointEigenSolver<Mat> es(t.lambda, Eigen::EigenvaluesOnly);
        if (theta_weight >= es.eigenvalues().minCoeff())
          throw divergence_error(
              "weighted_norm: theta must stay below the smallest Lambda eigenvalue");
      }
      const auto& terms = f.terms();
      double acc = 0.0;
      for (std::size_t j = 0; j < terms.size(); ++j) {
        for (std::size_t k = 0; k < terms.size(); ++k) {
          const double cj = terms[j].alpha * std::sqrt(terms[j].lambda.determinant()) /
                            std::pow(2.0 * std::numbers::pi, 0.5 * d);
          const double ck = terms[k].alpha * std::sqrt(terms[k].lambda.determinant()) /
                            std::pow(2.0 * std::numbers::pi, 0.5 * d);
          const Mat g = terms[j].lambda + terms[k].lambda -
                        2.0 * theta_weight * Mat::Identity(d, d);
          const Vec delta = terms[j].gamma - terms[k].gamma;
          acc += cj * ck * oscillatory_gaussian_integral(g, delta);
        }
      }
      return std::sqrt(std::max(0.0, acc));
    }
    case strength_function::kind::tabulated: {
      // Trapezoid over the compact support.
      const auto& g = f.grid();
      double acc = 0.0;
      const std::size_t total = g.values.size();
      for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        double cell = 1.0;
        double w2 = 0.0;
        for (int k = d - 1; k >= 0; --k) {
          const auto& ax = g.axes[k];
          const int i = static_cast<int>(rem % ax.size());
          rem /= ax.size();
          double h = 0.0;
          if (i > 0) h += 0.5 * (ax[i] - ax[i - 1]);
          if (i + 1 < static_cast<int>(ax.size())) h += 0.5 * (ax[i + 1] - ax[i]);
          cell *= h;
          w2 += ax[i] * ax[i];
        }
        acc += cell * std::norm(g.values[flat]) * std::exp(theta_weight * w2);
      }
      return std::sqrt(acc);
    }
  }
  return 0.0;
}

double l1_bound(const strength_function& f, double theta_weight) {
  if (!(theta_weight > 0.0)) throw invalid_input("l1_bound: theta must be positive");
  return std::pow(std::numbers::pi / theta_weight, 0.25 * f.dim()) *
         weighted_norm(f, theta_weight);
}

// ---------------------------------------------------------------------------
// classical potential

namespace {

const std::vector<gaussian_term>& mixture_terms(const weyl_variation& variation) {
  static const std::vector<gaussian_term> none;
  switch (variation.psi.type()) {
    case strength_function::kind::gaussian_mixture:
      return variation.psi.terms();
    case strength_function::kind::zero:
      return none;
    case strength_function::kind::tabulated:
      throw unsupported_representation(
          "potential: only Gaussian-mixture strength functions have a closed-form potential");
  }
  return none;
}

}  // namespace

double potential_value(const weyl_variation& variation, const Vec& q) {
  double acc = 0.0;
  for (const auto& t : mixture_terms(variation)) {
    const Vec dq = q - t.gamma;
    acc += t.alpha * std::exp(-0.5 * dq.dot(t.lambda.llt().solve(dq)));
  }
  return acc;
}

Vec potential_gradient(const weyl_variation& variation, const Vec& q) {
  Vec acc = Vec::Zero(variation.d());
  for (const auto& t : mixture_terms(variation)) {
    const Vec dq = q - t.gamma;
    const Vec li_dq = t.lambda.llt().solve(dq);
    acc -= t.alpha * std::exp(-0.5 * dq.dot(li_dq)) * li_dq;
  }
  return acc;
}

}  // namespace oqho::weyl
