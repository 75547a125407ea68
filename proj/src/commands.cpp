#include "oqho/commands.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "oqho/io.hpp"

namespace oqho::commands {

namespace {

const char* example1_json = R"json({
  "model": {
    "theta": "position-momentum",
    "R": [[1.5803, 0.0], [0.0, 0.7490]],
    "M": [[-0.1765, -1.3320], [0.7914, -2.3299]]
  },
  "variation": {
    "S_rows": [0],
    "psi": {
      "type": "gaussian_mixture",
      "terms": [{"alpha": -146.0546, "gamma": [3.1641], "lambda": [[0.1589]]}]
    }
  },
  "grid": {"count": 256},
  "bounds": {"theta_weights": [0.05, 0.1, 0.5, 1.0], "mc_count": 100000},
  "seed": 20170915,
  "outputs": {"dir": "out", "formats": ["csv", "bin"]}
})json";

const char* example2_json = R"json({
  "model": {
    "theta": "position-momentum",
    "R": [[2.5542, -2.3651, 0.0, 0.0],
          [-2.3651, 2.6995, 0.0, 0.0],
          [0.0, 0.0, 0.9306, -1.4504],
          [0.0, 0.0, -1.4504, 7.4900]],
    "M": [[0.3021, 1.1784, 0.0313, -1.4647],
          [0.0131, -0.2981, 1.5002, 0.5361],
          [-0.0110, -0.0418, -1.1125, 1.5380],
          [-0.7233, -1.0734, 0.7212, 0.1241]]
  },
  "variation": {
    "S_rows": [0, 1],
    "psi": {
      "type": "gaussian_mixture",
      "terms": [{"alpha": -1.0, "gamma": [1.0, -0.5], "lambda": [[5.0, 0.0], [0.0, 5.0]]}]
    }
  },
  "grid": {"count": 64},
  "bounds": {"theta_weights": [0.5, 1.0, 2.0, 4.0], "mc_count": 100000},
  "seed": 20170915,
  "outputs": {"dir": "out", "formats": ["csv", "bin"]}
})json";

struct pipeline {
  model::state_space ss;
  Mat P;
  bool p_positive_definite = false;
  perturb::perturbation_context ctx;
  io::provenance prov;
};

pipeline build_pipeline(const config::run_config& cfg) {
  pipeline p;
  p.ss = model::build_state_space(cfg.mdl);
  const auto stab = model::is_hurwitz(p.ss.A);
  if (!stab.hurwitz)
    throw stability_error("model is unstable: spectral abscissa " +
                          io::format_double(stab.spectral_abscissa));
  const auto inv = gaussian::invariant_covariance(p.ss);
  p.P = inv.P;
  p.p_positive_definite = inv.positive_definite;
  perturb::time_rule tr = cfg.trule;
  tr.lambda_fraction = cfg.trule.lambda_fraction;
  p.ctx = perturb::make_context(cfg.mdl, p.ss, p.P, cfg.variation, tr, cfg.wrule);
  p.prov.config_hash = io::sha256_hex(cfg.raw_text);
  p.prov.seed = cfg.seed;
  return p;
}

std::vector<spectral::grid_spec> make_grid(const config::run_config& cfg, const Mat& p) {
  double half = cfg.grid_half_width
                    ? *cfg.grid_half_width
                    : 8.0 * std::sqrt(p.diagonal().maxCoeff());
  spectral::grid_spec ax{cfg.grid_count, 2.0 * half / cfg.grid_count};
  return std::vector<spectral::grid_spec>(p.rows(), ax);
}

void write_field(const spectral::correction_field& field, const config::run_config& cfg,
                 const std::string& out_dir, const std::string& stem,
                 const io::provenance& prov, std::ostream& log) {
  if (cfg.write_csv) {
    io::atomic_write(out_dir + "/" + stem + ".csv", io::field_csv(field, prov));
    log << "wrote " << out_dir << "/" << stem << ".csv\n";
  }
  if (cfg.write_binary) {
    io::atomic_write(out_dir + "/" + stem + ".bin", io::field_binary(field, prov));
    log << "wrote " << out_dir << "/" << stem << ".bin\n";
  }
}

}  // namespace

const char* bundled_config(const std::string& which) {
  if (which == "example1") return example1_json;
  if (which == "example2") return example2_json;
  throw invalid_input("unknown bundled config \"" + which + "\" (use example1 or example2)");
}

int cmd_check(const config::run_config& cfg, std::ostream& out) {
  const auto ss = model::build_state_space(cfg.mdl);
  const auto pr = model::check_physical_realizability(ss, cfg.mdl.theta);
  const auto stab = model::is_hurwitz(ss.A);
  out << "physical realizability:\n";
  out << "  dynamics residual |A Theta + Theta A' + B J B'|: "
      << io::format_double(pr.dynamics_residual) << "\n";
  out << "  coupling residual |Theta C' + B J|:              "
      << io::format_double(pr.coupling_residual) << "\n";
  out << "  tolerance: " << io::format_double(pr.tolerance) << "  ->  "
      << (pr.pass ? "PASS" : "FAIL") << "\n";
  out << "stability:\n";
  out << "  spectral abscissa: " << io::format_double(stab.spectral_abscissa) << "  ->  "
      << (stab.hurwitz ? "Hurwitz" : "NOT Hurwitz") << "\n";
  if (!stab.hurwitz) return exit_numerical;
  const auto inv = gaussian::invariant_covariance(ss);
  const double heis = gaussian::heisenberg_residual(inv.P, cfg.mdl.theta);
  out << "invariant state:\n";
  out << "  min eig(P + i Theta): " << io::format_double(heis) << "  ->  "
      << (heis >= -1e-10 ? "feasible" : "INFEASIBLE") << "\n";
  return (pr.pass && heis >= -1e-10) ? exit_ok : exit_numerical;
}

int cmd_invariant(const config::run_config& cfg, const std::string& out_dir, std::ostream& out) {
  const auto ss = model::build_state_space(cfg.mdl);
  const auto stab = model::is_hurwitz(ss.A);
  io::provenance prov{io::sha256_hex(cfg.raw_text), cfg.seed};
  if (!stab.hurwitz) {
    out << "model unstable (abscissa " << io::format_double(stab.spectral_abscissa) << ")\n";
    return exit_numerical;
  }
  const auto inv = gaussian::invariant_covariance(ss);
  io::atomic_write(out_dir + "/invariant_covariance.csv",
                   io::matrix_csv(inv.P, prov, "invariant covariance P" +
                                                   std::string(inv.positive_definite
                                                                   ? " (positive definite)"
                                                                   : " (singular)")));
  io::atomic_write(out_dir + "/spectrum.csv", io::spectrum_csv(ss.A, prov));
  io::atomic_write(out_dir + "/state.json",
                   io::gaussian_state_json(Vec::Zero(ss.n()), inv.P, prov));
  out << "wrote " << out_dir << "/invariant_covariance.csv, spectrum.csv, state.json\n";
  out << "P positive definite: " << (inv.positive_definite ? "true" : "false") << "\n";
  return exit_ok;
}

int cmd_correct(const config::run_config& cfg, const std::string& what,
                const std::string& out_dir, double t, std::ostream& out) {
  const pipeline p = build_pipeline(cfg);
  const auto grid = make_grid(cfg, p.P);

  if (what == "moments") {
    const Vec mu = perturb::mean_correction(p.ctx);
    const Mat pt = perturb::second_moment_correction(p.ctx);
    std::ostringstream rep;
    rep << "# oqho moment corrections | " << p.prov.line() << "\n";
    rep << "mu_tilde:\n";
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      rep << "  " << io::format_double(mu[i]) << "\n";
    rep << "P_tilde:\n";
    for (Eigen::Index i = 0; i < pt.rows(); ++i) {
      rep << " ";
      for (Eigen::Index j = 0; j < pt.cols(); ++j) rep << " " << io::format_double(pt(i, j));
      rep << "\n";
    }
    io::atomic_write(out_dir + "/moment_correction.txt", rep.str());
    out << rep.str();
    out << "wrote " << out_dir << "/moment_correction.txt\n";
    return exit_ok;
  }

  if (what == "qcf" || what == "qpdf") {
    const auto qcf = spectral::sample_qcf_correction(p.ctx, grid);
    const cplx center = qcf.cvalues[qcf.flat(std::vector<int>(qcf.dims(), cfg.grid_count / 2))];
    out << "qcf correction center value: " << io::format_double(std::abs(center)) << "\n";
    write_field(qcf, cfg, out_dir, "qcf_correction", p.prov, out);
    if (what == "qpdf") {
      const auto qpdf = spectral::qpdf_from_qcf(qcf);
      const double zero_sum =
          spectral::field_moment(qpdf, std::vector<int>(qpdf.dims(), 0));
      out << "qpdf correction zero-sum: " << io::format_double(zero_sum) << "\n";
      out << "hermitian residue: " << io::format_double(qpdf.hermitian_residue)
          << ", boundary adjustment: " << io::format_double(qpdf.nyquist_adjustment) << "\n";
      write_field(qpdf, cfg, out_dir, "qpdf_correction", p.prov, out);
    }
    return exit_ok;
  }

  if (what == "transient") {
    if (!(t > 0.0)) throw invalid_input("--t must be positive for transient corrections");
    auto field = spectral::sample_qcf(
        [&](const Vec& u) { return perturb::transient_qcf_correction(p.ctx, t, u); }, grid);
    const cplx center =
        field.cvalues[field.flat(std::vector<int>(field.dims(), cfg.grid_count / 2))];
    out << "transient qcf correction at t = " << io::format_double(t)
        << ", center value: " << io::format_double(std::abs(center)) << "\n";
    write_field(field, cfg, out_dir, "qcf_correction_transient", p.prov, out);
    return exit_ok;
  }

  throw invalid_input("unknown correction kind \"" + what +
                      "\" (use qcf|qpdf|moments|transient)");
}

int cmd_bounds(const config::run_config& cfg, const std::string& out_dir, std::ostream& out) {
  const pipeline p = build_pipeline(cfg);
  const auto pair = bounds::find_lyapunov_pair(p.ss, cfg.lambda_fraction);
  numerics::seeded_sampler sampler{cfg.seed, 0};
  const auto rep =
      bounds::run_sensitivity(p.ctx, pair, cfg.theta_weights, sampler, cfg.mc_count);
  io::atomic_write(out_dir + "/sensitivity_report.txt",
                   io::report_text(rep, p.ctx.n(), p.prov));
  out << "lambda = " << io::format_double(rep.lambda)
      << ", tau = " << io::format_double(rep.tau) << ", samples = " << rep.sample_count
      << "\n";
  out << std::left << std::setw(10) << "theta" << std::setw(18) << "mean_sens"
      << std::setw(24) << "mc_norm_F (stderr)" << std::setw(24) << "mc_norm_G (stderr)"
      << std::setw(16) << "hs_bound" << "warn\n";
  for (const auto& e : rep.entries) {
    std::ostringstream f, g;
    f << std::setprecision(6) << e.mc_norm_f.value << " (" << std::setprecision(2)
      << e.mc_norm_f.std_error << ")";
    g << std::setprecision(6) << e.mc_norm_g.value << " (" << std::setprecision(2)
      << e.mc_norm_g.std_error << ")";
    out << std::left << std::setw(10) << e.theta << std::setw(18) << std::setprecision(8)
        << e.mean_sensitivity << std::setw(24) << f.str() << std::setw(24) << g.str()
        << std::setw(16) << std::setprecision(6) << e.hs_bound
        << (e.divergence_warning ? "diverging-bound" : "") << "\n";
  }
  out << "wrote " << out_dir << "/sensitivity_report.txt\n";
  return exit_ok;
}

namespace {

struct repro_row {
  std::string name;
  double computed;
  double reference;
  double tolerance;
  bool pass() const { return std::abs(computed - reference) <= tolerance; }
};

void matrix_rows(std::vector<repro_row>& rows, const std::string& name, const Mat& computed,
                 const Mat& reference, double tol) {
  for (Eigen::Index i = 0; i < reference.rows(); ++i)
    for (Eigen::Index j = 0; j < reference.cols(); ++j)
      rows.push_back({name + "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")",
                      computed(i, j), reference(i, j), tol});
}

void spectrum_rows(std::vector<repro_row>& rows, const std::string& name, const Mat& a,
                   const std::vector<cplx>& reference, double tol) {
  Eigen::EigenSolver<Mat> es(a, false);
  std::vector<cplx> eigs(es.eigenvalues().data(),
                         es.eigenvalues().data() + es.eigenvalues().size());
  auto key = [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  };
  std::sort(eigs.begin(), eigs.end(), key);
  std::vector<cplx> ref = reference;
  std::sort(ref.begin(), ref.end(), key);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    rows.push_back({name + "[" + std::to_string(i) + "].re", eigs[i].real(), ref[i].real(), tol});
    rows.push_back({name + "[" + std::to_string(i) + "].im", eigs[i].imag(), ref[i].imag(), tol});
  }
}

int print_rows(const std::vector<repro_row>& rows, std::ostream& out) {
  bool all = true;
  out << std::left << std::setw(26) << "quantity" << std::setw(18) << "computed"
      << std::setw(18) << "reference" << std::setw(12) << "tolerance" << "result\n";
  for (const auto& r : rows) {
    all = all && r.pass();
    out << std::left << std::setw(26) << r.name << std::setw(18) << std::setprecision(9)
        << r.computed << std::setw(18) << r.reference << std::setw(12) << r.tolerance
        << (r.pass() ? "PASS" : "FAIL") << "\n";
  }
  out << (all ? "all rows PASS\n" : "FAIL: at least one row out of tolerance\n");
  return all ? exit_ok : exit_numerical;
}

}  // namespace

int cmd_repro(const std::string& which, const std::string& out_dir, std::ostream& out) {
  auto cfg = config::parse_config(bundled_config(which));
  cfg.out_dir = out_dir;
  return cmd_repro(which, cfg, out);
}

int cmd_repro(const std::string& which, const config::run_config& cfg, std::ostream& out) {
  const pipeline p = build_pipeline(cfg);
  std::vector<repro_row> rows;

  if (which == "example1") {
    Mat a_ref(2, 2), b_ref(2, 2), c_ref(2, 2), p_ref(2, 2);
    a_ref << -1.4654, 0.7490, -1.5803, -1.4654;
    b_ref << -1.3320, -2.3299, 0.1765, -0.7914;
    c_ref << 1.5828, -4.6598, 0.3530, 2.6640;
    p_ref << 2.2207, -0.4635, -0.4635, 0.7241;
    matrix_rows(rows, "A", p.ss.A, a_ref, 5e-5);
    matrix_rows(rows, "B", p.ss.B, b_ref, 5e-5);
    matrix_rows(rows, "C", p.ss.C, c_ref, 5e-5);
    spectrum_rows(rows, "eig(A)", p.ss.A,
                  {cplx(-1.4654, 1.0880), cplx(-1.4654, -1.0880)}, 1e-3);
    matrix_rows(rows, "P", p.P, p_ref, 1e-3);

    const auto& term = cfg.variation.psi.terms().front();
    const double xi = p.P(0, 0) + term.lambda(0, 0);
    rows.push_back({"Xi", xi, 2.3797, 1e-3});
    const double stiffness = -term.alpha / term.lambda(0, 0);
    rows.push_back({"well stiffness", stiffness, 919.0101, 1e-3 * 919.0101});
    const Vec mu = perturb::mean_correction(p.ctx);
    rows.push_back({"mean shift (position)", mu[0], 1.3677, 0.02 * 1.3677});
  } else if (which == "example2") {
    Mat a_ref(4, 4);
    a_ref << -0.7588, -0.0857, 0.9306, -3.2322,
             -0.8379, -2.2896, 0.3314,  7.4900,
             -2.5542,  2.5944, -0.7588, -0.8379,
              2.1358, -2.6995, -0.0857, -2.2896;
    matrix_rows(rows, "A", p.ss.A, a_ref, 5e-5);
    spectrum_rows(rows, "eig(A)", p.ss.A,
                  {cplx(-1.7804, 5.1767), cplx(-1.7804, -5.1767), cplx(-1.2680, 0.8111),
                   cplx(-1.2680, -0.8111)},
                  1e-3);
    // qualitative reproduction of the sensitivity display: nonincreasing in theta
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (double theta : {0.5, 1.0, 2.0, 4.0}) {
      const double s = bounds::mean_sensitivity_norm(p.ctx, theta);
      monotone = monotone && s <= prev + 1e-12;
      prev = s;
    }
    rows.push_back({"mean sensitivity monotone", monotone ? 1.0 : 0.0, 1.0, 0.5});
  } else {
    throw invalid_input("unknown repro target \"" + which + "\"");
  }
  return print_rows(rows, out);
}

}  // namespace oqho::commands
