#include "doctest.h"
#include "oqho/gaussian.hpp"
#include "oqho/model.hpp"
#include "oracles.hpp"

using namespace oqho;

namespace {

model::oqho_model example1() {
  model::oqho_model mdl;
  mdl.theta = model::ccr_position_momentum(2);
  mdl.R.resize(2, 2);
  mdl.R << 1.5803, 0.0, 0.0, 0.7490;
  mdl.M.resize(2, 2);
  mdl.M << -0.1765, -1.3320, 0.7914, -2.3299;
  return mdl;
}

model::oqho_model example2() {
  model::oqho_model mdl;
  mdl.theta = model::ccr_position_momentum(4);
  mdl.R.resize(4, 4);
  mdl.R << 2.5542, -2.3651, 0, 0, -2.3651, 2.6995, 0, 0, 0, 0, 0.9306, -1.4504, 0, 0,
      -1.4504, 7.4900;
  mdl.M.resize(4, 4);
  mdl.M << 0.3021, 1.1784, 0.0313, -1.4647, 0.0131, -0.2981, 1.5002, 0.5361, -0.0110,
      -0.0418, -1.1125, 1.5380, -0.7233, -1.0734, 0.7212, 0.1241;
  return mdl;
}

}  // namespace

TEST_CASE("position-momentum CCR matrix") {
  const Mat t2 = model::ccr_position_momentum(2);
  CHECK(t2(0, 1) == 0.5);
  CHECK(t2(1, 0) == -0.5);
  CHECK(t2(0, 0) == 0.0);

  const Mat t4 = model::ccr_position_momentum(4);
  CHECK(t4(0, 2) == 0.5);
  CHECK(t4(1, 3) == 0.5);
  CHECK(t4(2, 0) == -0.5);

  for (int n : {2, 4, 6}) {
    const Mat t = model::ccr_position_momentum(n);
    CHECK((t + t.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((4.0 * t * t + Mat::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(model::ccr_position_momentum(3), invalid_input);
}

TEST_CASE("field coupling matrix J") {
  Mat j2(2, 2);
  j2 << 0, 1, -1, 0;
  CHECK((model::ito_coupling_matrix(2) - j2).cwiseAbs().maxCoeff() == 0.0);
  for (int m : {2, 4, 6}) {
    const Mat j = model::ito_coupling_matrix(m);
    CHECK((j * j + Mat::Identity(m, m)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(model::ito_coupling_matrix(5), invalid_input);
}

TEST_CASE("state space reconstruction matches the published one-mode matrices") {
  const auto ss = model::build_state_space(example1());
  Mat a_ref(2, 2), b_ref(2, 2), c_ref(2, 2);
  a_ref << -1.4654, 0.7490, -1.5803, -1.4654;
  b_ref << -1.3320, -2.3299, 0.1765, -0.7914;
  c_ref << 1.5828, -4.6598, 0.3530, 2.6640;
  CHECK((ss.A - a_ref).cwiseAbs().maxCoeff() < 5e-5);
  CHECK((ss.B - b_ref).cwiseAbs().maxCoeff() < 5e-5);
  CHECK((ss.C - c_ref).cwiseAbs().maxCoeff() < 5e-5);
  CHECK((ss.omega.imag() - ss.J).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero energy and coupling gives zero dynamics") {
  model::oqho_model mdl = example1();
  mdl.R.setZero();
  mdl.M.setZero();
  const auto ss = model::build_state_space(mdl);
  CHECK(ss.A.cwiseAbs().maxCoeff() == 0.0);
  CHECK(ss.B.cwiseAbs().maxCoeff() == 0.0);
  CHECK(ss.C.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-mode example spectrum") {
  const auto ss = model::build_state_space(example2());
  Eigen::EigenSolver<Mat> es(ss.A, false);
  std::vector<cplx> eigs(es.eigenvalues().data(), es.eigenvalues().data() + 4);
  std::sort(eigs.begin(), eigs.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  std::vector<cplx> ref = {{-1.7804, -5.1767}, {-1.7804, 5.1767}, {-1.2680, -0.8111},
                           {-1.2680, 0.8111}};
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(eigs[i] - ref[i]) < 1e-3);
}

TEST_CASE("physical realizability holds by construction and detects tampering") {
  const auto mdl = example1();
  auto ss = model::build_state_space(mdl);
  auto pr = model::check_physical_realizability(ss, mdl.theta);
  CHECK(pr.pass);

  ss.A(0, 0) += 0.1;
  pr = model::check_physical_realizability(ss, mdl.theta);
  CHECK_FALSE(pr.pass);
}

TEST_CASE("randomized models are physically realizable") {
  for (std::uint64_t k = 0; k < 100; ++k) {
    const int n = (k % 2) ? 2 : 4;
    const int m = (k % 3 == 0) ? 4 : 2;
    const auto mdl = oracles::random_model(n, m, 1000 + k);
    const auto ss = model::build_state_space(mdl);
    const auto pr = model::check_physical_realizability(ss, mdl.theta);
    CHECK(pr.pass);
    // coupling residual is zero in exact arithmetic
    CHECK((mdl.theta * ss.C.transpose() + ss.B * ss.J).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("hurwitz verdicts") {
  const auto ss = model::build_state_space(example1());
  const auto stab = model::is_hurwitz(ss.A);
  CHECK(stab.hurwitz);
  CHECK(stab.spectral_abscissa == doctest::Approx(-1.4654).epsilon(1e-3));

  CHECK_FALSE(model::is_hurwitz(Mat::Zero(2, 2)).hurwitz);

  // M = 0 leaves purely rotational dynamics 2 Theta R
  model::oqho_model conservative = example1();
  conservative.M.setZero();
  const auto free_ss = model::build_state_space(conservative);
  CHECK_FALSE(model::is_hurwitz(free_ss.A).hurwitz);
}

TEST_CASE("hurwitz models admit the shifted lyapunov certificate") {
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto mdl = oracles::random_stable_model(2, 2, 300 + k);
    const auto ss = model::build_state_space(mdl);
    const auto stab = model::is_hurwitz(ss.A);
    const Mat gamma = numerics::solve_shifted_lyapunov(ss.A, 0.9 * -stab.spectral_abscissa);
    Eigen::SelfAdjointEigenSolver<Mat> es(gamma);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("model validation rejects malformed inputs") {
  model::oqho_model mdl = example1();
  mdl.R(0, 1) = 0.3;  // asymmetric
  CHECK_THROWS_AS(mdl.validate(), invalid_input);

  mdl = example1();
  mdl.M.resize(2, 4);
  mdl.M.setZero();
  CHECK_THROWS_AS(model::build_state_space(mdl), invalid_input);

  mdl = example1();
  mdl.theta = Mat::Zero(2, 2);
  CHECK_THROWS_AS(mdl.validate(), invalid_input);
}
