#include "oqho/perturb.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

namespace oqho::perturb {

namespace nm = numerics;
using weyl::strength_function;

namespace {

constexpr double imag_residue_tol = 1e-8;
constexpr double tail_tol = 1e-8;

double mixture_coef(const weyl::gaussian_term& t, int d) {
  return t.alpha * std::sqrt(t.lambda.determinant()) /
         std::pow(2.0 * std::numbers::pi, 0.5 * d);
}

perturbation_context::w_block make_w_block(const Mat& xi, int order) {
  const int d = static_cast<int>(xi.rows());
  Eigen::LLT<Mat> llt(xi);
  if (llt.info() != Eigen::Success)
    throw degeneracy_error("perturbation context: S P S^T + Lambda is not positive definite");
  const Mat l = llt.matrixL();
  const double jac = std::pow(2.0, 0.5 * d) / l.diagonal().prod();
  const auto rule = nm::gauss_hermite(order);
  const int per_dim = static_cast<int>(rule.nodes.size());

  perturbation_context::w_block block;
  std::vector<int> idx(d, 0);
  Vec x(d);
  while (true) {
    double wq = 1.0;
    for (int k = 0; k < d; ++k) {
      x[k] = rule.nodes[idx[k]];
      wq *= rule.weights[idx[k]];
    }
    block.nodes.push_back(std::sqrt(2.0) *
                          l.transpose().template triangularView<Eigen::Upper>().solve(x));
    block.weights.push_back(wq * jac);
    int k = 0;
    while (k < d && ++idx[k] == per_dim) idx[k++] = 0;
    if (k == d) break;
  }
  return block;
}

}  // namespace

const numerics::lyapunov_solver& perturbation_context::ale() const {
  if (!ale_) ale_ = std::make_shared<nm::lyapunov_solver>(ss.A);
  return *ale_;
}

perturbation_context make_context(const model::oqho_model& mdl, const model::state_space& ss,
                                  const Mat& P, const weyl::weyl_variation& variation,
                                  time_rule tr, w_rule wr) {
  variation.validate(mdl.n(), mdl.m());
  perturbation_context ctx;
  ctx.ss = ss;
  ctx.theta = mdl.theta;
  ctx.P = P;
  ctx.M = mdl.M;
  ctx.D = mdl.M * mdl.theta - ss.J * mdl.M * P;
  ctx.variation = variation;
  ctx.trule = tr;
  ctx.wrule = wr;

  const auto stab = model::is_hurwitz(ss.A);
  if (!stab.hurwitz) throw stability_error("perturbation context: A must be Hurwitz");
  ctx.abscissa = -stab.spectral_abscissa;
  if (!(tr.lambda_fraction > 0.0 && tr.lambda_fraction < 1.0))
    throw invalid_input("time_rule: lambda_fraction must lie in (0, 1)");
  ctx.lambda0 = tr.lambda_fraction * ctx.abscissa;

  if (tr.panels < 1 || tr.order < 2) throw invalid_input("time_rule: panels >= 1, order >= 2");
  double hi = 1.0;
  for (int p = 0; p < tr.panels; ++p) {
    const double lo = (p + 1 == tr.panels) ? 0.0 : 0.5 * hi;
    const auto rule = nm::gauss_legendre(tr.order, lo, hi);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double z = rule.nodes[i];
      ctx.t_nodes.push_back(-std::log(z) / ctx.lambda0);
      ctx.t_weights.push_back(rule.weights[i] / (ctx.lambda0 * z));
    }
    hi = lo;
  }
  // with a single panel there is no tail to estimate
  ctx.tail_begin = tr.panels > 1 ? (tr.panels - 1) * tr.order : tr.panels * tr.order;
  ctx.exp_ta.reserve(ctx.t_nodes.size());
  for (double t : ctx.t_nodes) ctx.exp_ta.push_back(nm::matrix_exponential(ss.A, t));

  const Mat& S = variation.S;
  ctx.SP = S * P;
  ctx.STh = S * ctx.theta.transpose();
  ctx.DS = ctx.D * S.transpose();
  ctx.SDt = S * ctx.D.transpose();
  ctx.MJ = mdl.M.transpose() * ss.J;
  ctx.MTh = mdl.M * mdl.theta;

  int order = wr.order;
  if (variation.d() >= 3 && order > 24) {
    std::cerr << "oqho: w-quadrature order reduced to 24 for d = " << variation.d() << "\n";
    order = 24;
  }
  const Mat xi0 = S * P * S.transpose();
  ctx.base_block = make_w_block(xi0, order);
  if (variation.psi.type() == strength_function::kind::gaussian_mixture)
    for (const auto& term : variation.psi.terms())
      ctx.psi_blocks.push_back(make_w_block(xi0 + term.lambda, order));
  ctx.upsilon_blocks.resize(variation.upsilon.size());
  for (std::size_t k = 0; k < variation.upsilon.size(); ++k)
    if (variation.upsilon[k].type() == strength_function::kind::gaussian_mixture)
      for (const auto& term : variation.upsilon[k].terms())
        ctx.upsilon_blocks[k].push_back(make_w_block(xi0 + term.lambda, order));
  return ctx;
}

namespace {

// Everything about a fixed u that the time integrals reuse across w nodes.
struct u_cache {
  double u_p_u;
  std::vector<Vec> sp;   // S P e^{t A^T} u          (d)
  std::vector<Vec> sth;  // S Theta^T e^{t A^T} u    (d)
  std::vector<Vec> da;   // D e^{t A^T} u            (m)
  std::vector<Vec> mta;  // M Theta e^{t A^T} u      (m)
};

u_cache make_u_cache(const perturbation_context& ctx, const Vec& u, bool with_g) {
  u_cache c;
  c.u_p_u = u.dot(ctx.P * u);
  const std::size_t nt = ctx.t_nodes.size();
  c.sp.reserve(nt);
  c.sth.reserve(nt);
  if (with_g) {
    c.da.reserve(nt);
    c.mta.reserve(nt);
  }
  for (const Mat& e : ctx.exp_ta) {
    const Vec a = e.transpose() * u;
    c.sp.push_back(ctx.SP * a);
    c.sth.push_back(ctx.STh * a);
    if (with_g) {
      c.da.push_back(ctx.D * a);
      c.mta.push_back(ctx.MTh * a);
    }
  }
  return c;
}

// int_0^inf -sin(phi) e^{-r} dt with r = u' e^{tA} P S'w, phi = u' e^{tA} Th S'w.
double time_integral_f(const perturbation_context& ctx, const u_cache& c, const Vec& w,
                       double* tail = nullptr) {
  double acc = 0.0, tail_acc = 0.0;
  const std::size_t nt = ctx.t_nodes.size();
  for (std::size_t i = 0; i < nt; ++i) {
    const double r = c.sp[i].dot(w);
    const double ph = c.sth[i].dot(w);
    const double val = -ctx.t_weights[i] * std::exp(-r) * std::sin(ph);
    acc += val;
    if (i >= static_cast<std::size_t>(ctx.tail_begin)) tail_acc += val;
  }
  if (tail) *tail = tail_acc;
  return acc;
}

// int_0^inf (sin(phi) D (a_t + S'w) + (sin(phi) I + cos(phi) J) M Th a_t) e^{-r} dt.
Vec time_integral_g(const perturbation_context& ctx, const u_cache& c, const Vec& w,
                    double* tail = nullptr) {
  const Vec dsw = ctx.DS * w;
  Vec acc = Vec::Zero(ctx.m());
  Vec tail_acc = Vec::Zero(ctx.m());
  const std::size_t nt = ctx.t_nodes.size();
  for (std::size_t i = 0; i < nt; ++i) {
    const double r = c.sp[i].dot(w);
    const double ph = c.sth[i].dot(w);
    const double s = std::sin(ph), co = std::cos(ph);
    const Vec val = (ctx.t_weights[i] * std::exp(-r)) *
                    (s * (c.da[i] + dsw + c.mta[i]) + co * (ctx.ss.J * c.mta[i]));
    acc += val;
    if (i >= static_cast<std::size_t>(ctx.tail_begin)) tail_acc += val;
  }
  if (tail) *tail = tail_acc.norm();
  return acc;
}

// Only the endpoint panel converges algebraically (the substituted integrand
// behaves like z^{1/fraction - 1} at z = 0); its quadrature error is a small
// fraction of its own contribution.  Estimated on the scale of the final
// prefactor-weighted value.
void check_tail(double tail, double total, double prefactor) {
  const double estimate = 1e-3 * prefactor * std::abs(tail);
  if (estimate > tail_tol * (1.0 + prefactor * std::abs(total)))
    throw accuracy_error("influence integral: time-quadrature tail estimate too large");
}

double gaussian_exponent(const perturbation_context& ctx, const Vec& w) {
  return w.dot(ctx.SP * ctx.variation.S.transpose() * w);
}

}  // namespace

double influence_F(const perturbation_context& ctx, const Vec& u, const Vec& w) {
  if (u.size() != ctx.n() || w.size() != ctx.d())
    throw invalid_input("influence_F: argument dimension mismatch");
  const u_cache c = make_u_cache(ctx, u, false);
  double tail = 0.0;
  const double ti = time_integral_f(ctx, c, w, &tail);
  const double pref = std::exp(-0.5 * (c.u_p_u + gaussian_exponent(ctx, w)));
  check_tail(tail, ti, 2.0 * pref);
  return 2.0 * pref * ti;
}

CVec influence_G(const perturbation_context& ctx, const Vec& u, const Vec& w) {
  if (u.size() != ctx.n() || w.size() != ctx.d())
    throw invalid_input("influence_G: argument dimension mismatch");
  const u_cache c = make_u_cache(ctx, u, true);
  double tail = 0.0;
  const Vec ti = time_integral_g(ctx, c, w, &tail);
  const double pref = std::exp(-0.5 * (c.u_p_u + gaussian_exponent(ctx, w)));
  check_tail(tail, ti.norm(), 2.0 * pref);
  return cplx(0.0, -2.0 * pref) * ti.cast<cplx>();
}

cplx qcf_correction(const perturbation_context& ctx, const Vec& u) {
  if (u.size() != ctx.n()) throw invalid_input("qcf_correction: u dimension mismatch");
  const auto& var = ctx.variation;
  const bool with_g = !var.upsilon_is_zero();
  const u_cache c = make_u_cache(ctx, u, with_g);

  cplx acc{0.0, 0.0};
  // Hamiltonian part: 2 * T_F(u, w) against Psi.
  if (var.psi.type() == strength_function::kind::gaussian_mixture) {
    for (std::size_t j = 0; j < var.psi.terms().size(); ++j) {
      const auto& term = var.psi.terms()[j];
      const double coef = mixture_coef(term, ctx.d());
      const auto& block = ctx.psi_blocks[j];
      for (std::size_t i = 0; i < block.nodes.size(); ++i) {
        const Vec& w = block.nodes[i];
        const cplx phase = std::exp(cplx(0.0, -w.dot(term.gamma)));
        acc += block.weights[i] * coef * phase * (2.0 * time_integral_f(ctx, c, w));
      }
    }
  } else if (var.psi.type() == strength_function::kind::tabulated) {
    for (std::size_t i = 0; i < ctx.base_block.nodes.size(); ++i) {
      const Vec& w = ctx.base_block.nodes[i];
      acc += ctx.base_block.weights[i] * var.psi(w) * (2.0 * time_integral_f(ctx, c, w));
    }
  }
  // Coupling part: sum_k conj(G_k) Upsilon_k with conj(G_k) = 2i e^{..} T_G,k.
  if (with_g) {
    for (std::size_t k = 0; k < var.upsilon.size(); ++k) {
      const auto& f = var.upsilon[k];
      if (f.type() == strength_function::kind::gaussian_mixture) {
        for (std::size_t j = 0; j < f.terms().size(); ++j) {
          const auto& term = f.terms()[j];
          const double coef = mixture_coef(term, ctx.d());
          const auto& block = ctx.upsilon_blocks[k][j];
          for (std::size_t i = 0; i < block.nodes.size(); ++i) {
            const Vec& w = block.nodes[i];
            const cplx phase = std::exp(cplx(0.0, -w.dot(term.gamma)));
            const Vec tg = time_integral_g(ctx, c, w);
            acc += block.weights[i] * coef * phase * cplx(0.0, 2.0) *
                   tg[static_cast<Eigen::Index>(k)];
          }
        }
      } else if (f.type() == strength_function::kind::tabulated) {
        for (std::size_t i = 0; i < ctx.base_block.nodes.size(); ++i) {
          const Vec& w = ctx.base_block.nodes[i];
          const Vec tg = time_integral_g(ctx, c, w);
          acc += ctx.base_block.weights[i] * f(w) * cplx(0.0, 2.0) *
                 tg[static_cast<Eigen::Index>(k)];
        }
      }
    }
  }
  return std::exp(-0.5 * c.u_p_u) * acc;
}

cplx qcf_correction_gaussian_bump(const perturbation_context& ctx, const Vec& u) {
  const auto& var = ctx.variation;
  if (var.psi.type() != strength_function::kind::gaussian_mixture ||
      var.psi.terms().size() != 1 || !var.upsilon_is_zero())
    throw unsupported_representation(
        "qcf_correction_gaussian_bump: requires a single Gaussian Psi term and Upsilon = 0");
  const auto& term = var.psi.terms().front();
  const Mat& S = var.S;
  const Mat xi = S * ctx.P * S.transpose() + term.lambda;
  Eigen::LLT<Mat> llt(xi);
  if (llt.info() != Eigen::Success)
    throw degeneracy_error("qcf_correction_gaussian_bump: Xi not positive definite");

  const CMat spp = (S * ctx.P).cast<cplx>() + cplx(0.0, 1.0) * (S * ctx.theta).cast<cplx>();
  const CMat spm = (S * ctx.P).cast<cplx>() - cplx(0.0, 1.0) * (S * ctx.theta).cast<cplx>();
  const CVec igamma = cplx(0.0, 1.0) * term.gamma.cast<cplx>();

  // bilinear (not Hermitian) form s^T Xi^{-1} s with real positive definite Xi
  auto quad = [&](const CVec& s) -> cplx {
    const Vec xr = llt.solve(s.real().eval());
    const Vec xi_ = llt.solve(s.imag().eval());
    const CVec x = xr.cast<cplx>() + cplx(0.0, 1.0) * xi_.cast<cplx>();
    return (s.transpose() * x)(0);
  };
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < ctx.t_nodes.size(); ++i) {
    const CVec a = (ctx.exp_ta[i].transpose() * u).cast<cplx>();
    const CVec sp = spp * a + igamma;
    const CVec sm = spm * a + igamma;
    acc += ctx.t_weights[i] * (std::exp(0.5 * quad(sp)) - std::exp(0.5 * quad(sm)));
  }
  const double pref = std::sqrt(term.lambda.determinant() / xi.determinant()) *
                      std::exp(-0.5 * u.dot(ctx.P * u));
  return cplx(0.0, term.alpha * pref) * acc;
}

namespace {

void check_imag_residue(double max_imag, double scale, const char* what) {
  if (max_imag > imag_residue_tol * (1.0 + scale))
    throw accuracy_error(std::string(what) + ": imaginary residue exceeds tolerance");
}

}  // namespace

Vec mean_correction(const perturbation_context& ctx) {
  const auto& var = ctx.variation;
  const Mat st = var.S.transpose();
  CVec integral = CVec::Zero(ctx.n());

  if (var.psi.type() == strength_function::kind::gaussian_mixture) {
    for (std::size_t j = 0; j < var.psi.terms().size(); ++j) {
      const auto& term = var.psi.terms()[j];
      const double coef = mixture_coef(term, ctx.d());
      const auto& block = ctx.psi_blocks[j];
      for (std::size_t i = 0; i < block.nodes.size(); ++i) {
        const Vec& w = block.nodes[i];
        const cplx val = coef * std::exp(cplx(0.0, -w.dot(term.gamma)));
        integral += (block.weights[i] * val) * (st * w).cast<cplx>();
      }
    }
  } else if (var.psi.type() == strength_function::kind::tabulated) {
    for (std::size_t i = 0; i < ctx.base_block.nodes.size(); ++i) {
      const Vec& w = ctx.base_block.nodes[i];
      integral += (ctx.base_block.weights[i] * var.psi(w)) * (st * w).cast<cplx>();
    }
  }

  for (std::size_t k = 0; k < var.upsilon.size(); ++k) {
    const auto& f = var.upsilon[k];
    const Vec mj_col = ctx.MJ.col(static_cast<Eigen::Index>(k));
    const Vec sdt_col = ctx.SDt.col(static_cast<Eigen::Index>(k));
    auto add_node = [&](const Vec& w, double wt, cplx val) {
      const Vec coeff = (st * w) * sdt_col.dot(w) + mj_col;
      integral += (wt * cplx(0.0, -1.0) * val) * coeff.cast<cplx>();
    };
    if (f.type() == strength_function::kind::gaussian_mixture) {
      for (std::size_t j = 0; j < f.terms().size(); ++j) {
        const auto& term = f.terms()[j];
        const double coef = mixture_coef(term, ctx.d());
        const auto& block = ctx.upsilon_blocks[k][j];
        for (std::size_t i = 0; i < block.nodes.size(); ++i)
          add_node(block.nodes[i], block.weights[i],
                   coef * std::exp(cplx(0.0, -block.nodes[i].dot(term.gamma))));
      }
    } else if (f.type() == strength_function::kind::tabulated) {
      for (std::size_t i = 0; i < ctx.base_block.nodes.size(); ++i)
        add_node(ctx.base_block.nodes[i], ctx.base_block.weights[i],
                 f(ctx.base_block.nodes[i]));
    }
  }

  const CMat a_inv_theta =
      ctx.ss.A.partialPivLu().solve(ctx.theta).cast<cplx>();
  const CVec mu = cplx(0.0, -2.0) * (a_inv_theta * integral);
  check_imag_residue(mu.imag().cwiseAbs().maxCoeff(), mu.real().cwiseAbs().maxCoeff(),
                     "mean_correction");
  return mu.real();
}

Mat second_moment_correction(const perturbation_context& ctx) {
  const auto& var = ctx.variation;
  const Mat st = var.S.transpose();
  const auto& solver = ctx.ale();
  const int n = ctx.n();
  CMat integral = CMat::Zero(n, n);

  auto sym = [](const Mat& x) { return (0.5 * (x + x.transpose())).eval(); };

  auto add_psi_node = [&](const Vec& w, double wt, cplx val) {
    const Vec v = st * w;
    const Mat rhs = sym(ctx.theta * v * (v.transpose() * ctx.P));
    integral += (wt * val) * solver.solve(rhs).cast<cplx>();
  };
  auto add_upsilon_node = [&](std::size_t k, const Vec& w, double wt, cplx val) {
    const Vec v = st * w;
    const Vec thv = ctx.theta * v;
    const Vec pv = ctx.P * v;
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    const Mat proj = Mat::Identity(n, n) - v * (v.transpose() * ctx.P);
    const Mat rhs = sym(thv * (ctx.D.row(kk) * proj) + thv * ctx.MTh.row(kk) -
                        pv * (ctx.ss.J * ctx.MTh).row(kk));
    integral += (wt * cplx(0.0, 1.0) * val) * solver.solve(rhs).cast<cplx>();
  };

  if (var.psi.type() == strength_function::kind::gaussian_mixture) {
    for (std::size_t j = 0; j < var.psi.terms().size(); ++j) {
      const auto& term = var.psi.terms()[j];
      const double coef = mixture_coef(term, ctx.d());
      const auto& block = ctx.psi_blocks[j];
      for (std::size_t i = 0; i < block.nodes.size(); ++i)
        add_psi_node(block.nodes[i], block.weights[i],
                     coef * std::exp(cplx(0.0, -block.nodes[i].dot(term.gamma))));
    }
  } else if (var.psi.type() == strength_function::kind::tabulated) {
    for (std::size_t i = 0; i < ctx.base_block.nodes.size(); ++i)
      add_psi_node(ctx.base_block.nodes[i], ctx.base_block.weights[i],
                   var.psi(ctx.base_block.nodes[i]));
  }
  for (std::size_t k = 0; k < var.upsilon.size(); ++k) {
    const auto& f = var.upsilon[k];
    if (f.type() == strength_function::kind::gaussian_mixture) {
      for (std::size_t j = 0; j < f.terms().size(); ++j) {
        const auto& term = f.terms()[j];
        const double coef = mixture_coef(term, ctx.d());
        const auto& block = ctx.upsilon_blocks[k][j];
        for (std::size_t i = 0; i < block.nodes.size(); ++i)
          add_upsilon_node(k, block.nodes[i], block.weights[i],
                           coef * std::exp(cplx(0.0, -block.nodes[i].dot(term.gamma))));
      }
    } else if (f.type() == strength_function::kind::tabulated) {
      for (std::size_t i = 0; i < ctx.base_block.nodes.size(); ++i)
        add_upsilon_node(k, ctx.base_block.nodes[i], ctx.base_block.weights[i],
                         f(ctx.base_block.nodes[i]));
    }
  }

  const CMat ptilde = -4.0 * integral;
  check_imag_residue(ptilde.imag().cwiseAbs().maxCoeff(), ptilde.real().cwiseAbs().maxCoeff(),
                     "second_moment_correction");
  const Mat out = ptilde.real();
  return 0.5 * (out + out.transpose());
}

cplx apply_perturbation_operator(const perturbation_context& ctx, const Vec& u) {
  if (u.size() != ctx.n()) throw invalid_input("apply_perturbation_operator: u mismatch");
  const auto& var = ctx.variation;
  const Mat st = var.S.transpose();
  const Vec spu = ctx.SP * u;          // (S P u), exponent slope in w
  const Vec sthu = ctx.STh * u;        // u' Theta S^T w = sthu . w
  const Vec mthu = ctx.MTh * u;        // M Theta u
  const Vec jmthu = ctx.ss.J * mthu;
  const double u_p_u = u.dot(ctx.P * u);

  cplx acc{0.0, 0.0};
  auto psi_node = [&](const Vec& w, double wt, cplx val) {
    const double ang = sthu.dot(w);
    acc += wt * val * (-2.0 * std::sin(ang)) * std::exp(-spu.dot(w));
  };
  auto upsilon_node = [&](std::size_t k, const Vec& w, double wt, cplx val) {
    const double ang = sthu.dot(w);
    const double s = std::sin(ang), co = std::cos(ang);
    const Eigen::Index kk = static_cast<Eigen::Index>(k);
    const double bracket = s * (ctx.D.row(kk).dot(u + st * w)) + s * mthu[kk] + co * jmthu[kk];
    acc += wt * val * cplx(0.0, 2.0) * bracket * std::exp(-spu.dot(w));
  };

  if (var.psi.type() == strength_function::kind::gaussian_mixture) {
    for (std::size_t j = 0; j < var.psi.terms().size(); ++j) {
      const auto& term = var.psi.terms()[j];
      const double coef = mixture_coef(term, ctx.d());
      const auto& block = ctx.psi_blocks[j];
      for (std::size_t i = 0; i < block.nodes.size(); ++i)
        psi_node(block.nodes[i], block.weights[i],
                 coef * std::exp(cplx(0.0, -block.nodes[i].dot(term.gamma))));
    }
  } else if (var.psi.type() == strength_function::kind::tabulated) {
    for (std::size_t i = 0; i < ctx.base_block.nodes.size(); ++i)
      psi_node(ctx.base_block.nodes[i], ctx.base_block.weights[i],
               var.psi(ctx.base_block.nodes[i]));
  }
  for (std::size_t k = 0; k < var.upsilon.size(); ++k) {
    const auto& f = var.upsilon[k];
    if (f.type() == strength_function::kind::gaussian_mixture) {
      for (std::size_t j = 0; j < f.terms().size(); ++j) {
        const auto& term = f.terms()[j];
        const double coef = mixture_coef(term, ctx.d());
        const auto& block = ctx.upsilon_blocks[k][j];
        for (std::size_t i = 0; i < block.nodes.size(); ++i)
          upsilon_node(k, block.nodes[i], block.weights[i],
                       coef * std::exp(cplx(0.0, -block.nodes[i].dot(term.gamma))));
      }
    } else if (f.type() == strength_function::kind::tabulated) {
      for (std::size_t i = 0; i < ctx.base_block.nodes.size(); ++i)
        upsilon_node(k, ctx.base_block.nodes[i], ctx.base_block.weights[i],
                     f(ctx.base_block.nodes[i]));
    }
  }
  return std::exp(-0.5 * u_p_u) * acc;
}

cplx transient_qcf_correction(const perturbation_context& ctx, double t, const Vec& u) {
  if (!(t >= 0.0)) throw invalid_input("transient_qcf_correction: t must be nonnegative");
  if (t == 0.0) return {0.0, 0.0};
  const double zt = std::exp(-ctx.lambda0 * t);
  const int panels =
      std::clamp(static_cast<int>(std::ceil(std::log2(1.0 / zt))) + 4, 6, 96);
  cplx acc{0.0, 0.0};
  for (int p = 0; p < panels; ++p) {
    // geometric edges between z_t and 1
    const double lo = zt * std::pow(1.0 / zt, static_cast<double>(p) / panels);
    const double hi = zt * std::pow(1.0 / zt, static_cast<double>(p + 1) / panels);
    const auto rule = nm::gauss_legendre(ctx.trule.order, lo, hi);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double z = rule.nodes[i];
      const double s = -std::log(z) / ctx.lambda0;
      const Mat e = nm::matrix_exponential(ctx.ss.A, s);
      // Sigma(s) = P - e^{sA} P e^{sA^T} for the invariant pair (A, P)
      const double sig_quad = u.dot(ctx.P * u) - (e.transpose() * u).dot(ctx.P * (e.transpose() * u));
      acc += rule.weights[i] / (ctx.lambda0 * z) *
             apply_perturbation_operator(ctx, e.transpose() * u) *
             std::exp(-0.5 * sig_quad);
    }
  }
  return acc;
}

}  // namespace oqho::perturb
