#include "oqho/spectral.hpp"

#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oqho::spectral {

void grid_spec::validate() const {
  if (count < 32 || (count & (count - 1)) != 0)
    throw invalid_input("grid_spec: count must be a power of two, >= 32");
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw invalid_input("grid_spec: spacing must be positive");
}

std::size_t correction_field::size() const {
  std::size_t total = 1;
  for (const auto& ax : axes) total *= static_cast<std::size_t>(ax.count);
  return total;
}

std::size_t correction_field::flat(const std::vector<int>& idx) const {
  std::size_t f = 0;
  for (int k = 0; k < dims(); ++k) f = f * axes[k].count + static_cast<std::size_t>(idx[k]);
  return f;
}

Vec correction_field::coords(std::size_t flat_index) const {
  Vec x(dims());
  for (int k = dims() - 1; k >= 0; --k) {
    const int c = axes[k].count;
    x[k] = axes[k].point(static_cast<int>(flat_index % c));
    flat_index /= c;
  }
  return x;
}

double correction_field::cell_volume() const {
  double v = 1.0;
  for (const auto& ax : axes) v *= ax.spacing;
  return v;
}

std::vector<grid_spec> default_grid(const Mat& p, int count) {
  const double half = 8.0 * std::sqrt(p.diagonal().maxCoeff());
  grid_spec ax{count, 2.0 * half / count};
  ax.validate();
  return std::vector<grid_spec>(p.rows(), ax);
}

namespace {

// min over the grid boundary of u^T P u; faces are quadratically minimized
// over the free coordinates (Schur complement of P^{-1}).
double boundary_min_quadratic(const Mat& p, const std::vector<grid_spec>& grid) {
  const Mat pinv = p.llt().solve(Mat::Identity(p.rows(), p.cols()));
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    const double h = grid[i].half_width();
    lo = std::min(lo, h * h / pinv(i, i));
  }
  return lo;
}

void fft_inplace(std::vector<cplx>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cplx x = a[i + k];
        const cplx y = a[i + k + len / 2] * w;
        a[i + k] = x + y;
        a[i + k + len / 2] = x - y;
        w *= wl;
      }
    }
  }
}

// Transforms axis `axis` of the row-major tensor with the centered
// convention: out[j] = (-1)^j sum_k (-1)^k in[k] e^{-2 pi i k j / N}.
void centered_dft_axis(std::vector<cplx>& data, const std::vector<grid_spec>& axes, int axis,
                       exec_policy policy) {
  const int nd = static_cast<int>(axes.size());
  const int n = axes[axis].count;
  std::size_t stride = 1;
  for (int k = axis + 1; k < nd; ++k) stride *= axes[k].count;
  std::size_t outer = 1;
  for (int k = 0; k < axis; ++k) outer *= axes[k].count;
  const std::size_t block = stride * static_cast<std::size_t>(n);

  const std::int64_t lines = static_cast<std::int64_t>(outer * stride);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (policy == exec_policy::parallel)
#endif
  for (std::int64_t line = 0; line < lines; ++line) {
    const std::size_t o = static_cast<std::size_t>(line) / stride;
    const std::size_t s = static_cast<std::size_t>(line) % stride;
    const std::size_t base = o * block + s;
    std::vector<cplx> tmp(n);
    for (int k = 0; k < n; ++k) {
      tmp[k] = data[base + k * stride];
      if (k & 1) tmp[k] = -tmp[k];
    }
    fft_inplace(tmp);
    for (int j = 0; j < n; ++j) {
      cplx v = tmp[j];
      if (j & 1) v = -v;
      data[base + j * stride] = v;
    }
  }
}

}  // namespace

correction_field sample_qcf(const std::function<cplx(const Vec&)>& fn,
                            const std::vector<grid_spec>& grid, exec_policy policy) {
  for (const auto& ax : grid) ax.validate();
  correction_field field;
  field.kind = correction_field::field_kind::qcf;
  field.axes = grid;
  const std::size_t total = field.size();
  field.cvalues.resize(total);

  const std::int64_t count = static_cast<std::int64_t>(total);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (policy == exec_policy::parallel)
#endif
  for (std::int64_t i = 0; i < count; ++i)
    field.cvalues[static_cast<std::size_t>(i)] =
        fn(field.coords(static_cast<std::size_t>(i)));
  return field;
}

correction_field sample_qcf_correction(const perturb::perturbation_context& ctx,
                                       const std::vector<grid_spec>& grid,
                                       exec_policy policy) {
  if (static_cast<int>(grid.size()) != ctx.n())
    throw invalid_input("sample_qcf_correction: grid dimension must equal n");
  for (const auto& ax : grid) ax.validate();
  const double min_quad = boundary_min_quadratic(ctx.P, grid);
  if (0.5 * min_quad < std::log(1e10)) {
    const Mat pinv = ctx.P.llt().solve(Mat::Identity(ctx.n(), ctx.n()));
    double suggest = 0.0;
    for (int i = 0; i < ctx.n(); ++i)
      suggest = std::max(suggest, std::sqrt(2.0 * std::log(1e10) * pinv(i, i)));
    throw coverage_error("sample_qcf_correction: grid too narrow; need half-width >= " +
                         std::to_string(suggest));
  }
  return sample_qcf([&ctx](const Vec& u) { return perturb::qcf_correction(ctx, u); }, grid,
                    policy);
}

correction_field qpdf_from_qcf(const correction_field& field, exec_policy policy) {
  if (field.kind != correction_field::field_kind::qcf)
    throw invalid_input("qpdf_from_qcf: input must be a qcf field");
  const int nd = field.dims();
  const std::size_t total = field.size();

  // Hermitian symmetrization in DFT index space (k and -k mod N).  The
  // extreme row k = 0 of each axis is self-paired under the modulus; its
  // adjustment is the discretization convention, reported separately.
  std::vector<cplx> sym(total);
  double residue = 0.0, nyquist = 0.0;
  std::vector<int> idx(nd), mirror(nd);
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rem = f;
    bool self_paired = false;
    for (int k = nd - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(rem % field.axes[k].count);
      rem /= field.axes[k].count;
      mirror[k] = idx[k] == 0 ? 0 : field.axes[k].count - idx[k];
      if (idx[k] == 0) self_paired = true;
    }
    std::size_t mf = 0;
    for (int k = 0; k < nd; ++k) mf = mf * field.axes[k].count + mirror[k];
    const cplx partner = std::conj(field.cvalues[mf]);
    const double dev = 0.5 * std::abs(field.cvalues[f] - partner);
    if (self_paired)
      nyquist = std::max(nyquist, dev);
    else
      residue = std::max(residue, dev);
    sym[f] = 0.5 * (field.cvalues[f] + partner);
  }
  double scale = 0.0;
  for (const auto& v : field.cvalues) scale = std::max(scale, std::abs(v));
  if (residue > 1e-7 * std::max(1.0, scale))
    throw coverage_error("qpdf_from_qcf: input violates Hermitian symmetry beyond 1e-7");

  for (int axis = 0; axis < nd; ++axis) centered_dft_axis(sym, field.axes, axis, policy);

  correction_field out;
  out.kind = correction_field::field_kind::qpdf;
  out.axes.resize(nd);
  double norm = std::pow(2.0 * std::numbers::pi, -nd);
  for (int k = 0; k < nd; ++k) {
    const auto& ax = field.axes[k];
    out.axes[k].count = ax.count;
    out.axes[k].spacing = 2.0 * std::numbers::pi / (ax.count * ax.spacing);
    norm *= ax.spacing;
  }
  out.rvalues.resize(total);
  double max_imag = 0.0;
  for (std::size_t f = 0; f < total; ++f) {
    out.rvalues[f] = norm * sym[f].real();
    max_imag = std::max(max_imag, std::abs(norm * sym[f].imag()));
  }
  // after symmetrization the transform is real up to roundoff
  if (max_imag > 1e-7 * std::max(1.0, scale))
    throw numerical_error("qpdf_from_qcf: unexpected imaginary residue after transform");
  out.hermitian_residue = std::max(residue, max_imag);
  out.nyquist_adjustment = nyquist;
  return out;
}

namespace {

double trapezoid_weight(int i, int count) { return (i == 0 || i + 1 == count) ? 0.5 : 1.0; }

}  // namespace

correction_field marginal(const correction_field& field, const std::vector<int>& keep_axes) {
  if (field.kind != correction_field::field_kind::qpdf)
    throw invalid_input("marginal: input must be a qpdf field");
  if (keep_axes.empty()) throw invalid_input("marginal: keep_axes must not be empty");
  const int nd = field.dims();
  std::vector<bool> keep(nd, false);
  for (int a : keep_axes) {
    if (a < 0 || a >= nd) throw invalid_input("marginal: axis index out of range");
    keep[a] = true;
  }

  correction_field out;
  out.kind = correction_field::field_kind::qpdf;
  for (int a : keep_axes) out.axes.push_back(field.axes[a]);
  out.rvalues.assign(out.size(), 0.0);

  std::vector<int> idx(nd);
  const std::size_t total = field.size();
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rem = f;
    for (int k = nd - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(rem % field.axes[k].count);
      rem /= field.axes[k].count;
    }
    double w = 1.0;
    for (int k = 0; k < nd; ++k)
      if (!keep[k]) w *= trapezoid_weight(idx[k], field.axes[k].count) * field.axes[k].spacing;
    std::size_t of = 0;
    for (int a : keep_axes) of = of * field.axes[a].count + idx[a];
    out.rvalues[of] += w * field.rvalues[f];
  }
  return out;
}

double field_moment(const correction_field& field, const std::vector<int>& exponents) {
  if (field.kind != correction_field::field_kind::qpdf)
    throw invalid_input("field_moment: input must be a qpdf field");
  if (static_cast<int>(exponents.size()) != field.dims())
    throw invalid_input("field_moment: one exponent per axis required");
  int degree = 0;
  for (int e : exponents) {
    if (e < 0) throw invalid_input("field_moment: exponents must be nonnegative");
    degree += e;
  }
  if (degree > 4) throw invalid_input("field_moment: total degree must be <= 4");

  const int nd = field.dims();
  std::vector<int> idx(nd);
  double acc = 0.0;
  const std::size_t total = field.size();
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rem = f;
    double w = 1.0, mono = 1.0;
    for (int k = nd - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(rem % field.axes[k].count);
      rem /= field.axes[k].count;
      w *= trapezoid_weight(idx[k], field.axes[k].count) * field.axes[k].spacing;
      const double x = field.axes[k].point(idx[k]);
      for (int e = 0; e < exponents[k]; ++e) mono *= x;
    }
    acc += w * mono * field.rvalues[f];
  }
  return acc;
}

cplx generalized_moment(const perturb::perturbation_context& ctx,
                        const std::function<cplx(const Vec&)>& sigma_fn,
                        const std::vector<grid_spec>& grid, bool include_correction) {
  if (static_cast<int>(grid.size()) != ctx.n())
    throw invalid_input("generalized_moment: grid dimension must equal n");
  for (const auto& ax : grid) ax.validate();

  correction_field probe;
  probe.kind = correction_field::field_kind::qcf;
  probe.axes.assign(grid.begin(), grid.end());
  const std::size_t total = probe.size();

  double cell = 1.0;
  for (const auto& ax : grid) cell *= ax.spacing;

  cplx acc{0.0, 0.0};
  double interior_max = 0.0, boundary_max = 0.0;
  std::vector<int> idx(ctx.n());
  for (std::size_t f = 0; f < total; ++f) {
    const Vec u = probe.coords(f);
    std::size_t rem = f;
    bool on_boundary = false;
    for (int k = ctx.n() - 1; k >= 0; --k) {
      const int i = static_cast<int>(rem % grid[k].count);
      rem /= grid[k].count;
      if (i == 0 || i + 1 == grid[k].count) on_boundary = true;
    }
    cplx phi = std::exp(-0.5 * u.dot(ctx.P * u));
    if (include_correction) phi += perturb::qcf_correction(ctx, u);
    const cplx term = sigma_fn(u) * phi;
    acc += term;
    const double mag = std::abs(term);
    if (on_boundary)
      boundary_max = std::max(boundary_max, mag);
    else
      interior_max = std::max(interior_max, mag);
  }
  if (boundary_max > 1e-10 * std::max(1.0, interior_max))
    throw coverage_error("generalized_moment: sigma mass extends beyond the grid");
  return cell * acc;
}

}  // namespace oqho::spectral
