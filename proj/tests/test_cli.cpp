#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oqho/commands.hpp"
#include "oqho/io.hpp"

using namespace oqho;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct temp_dir {
  fs::path path;
  temp_dir() : path(fs::temp_directory_path() / ("oqho_test_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~temp_dir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing: bundled examples round-trip through the schema") {
  const auto cfg1 = config::parse_config(commands::bundled_config("example1"));
  CHECK(cfg1.mdl.n() == 2);
  CHECK(cfg1.mdl.m() == 2);
  CHECK(cfg1.variation.d() == 1);
  CHECK(cfg1.grid_count == 256);
  CHECK(cfg1.seed == 20170915);

  const auto cfg2 = config::parse_config(commands::bundled_config("example2"));
  CHECK(cfg2.mdl.n() == 4);
  CHECK(cfg2.variation.d() == 2);
  CHECK_THROWS_AS(commands::bundled_config("example3"), invalid_input);
}

TEST_CASE("config errors carry field paths") {
  using nlohmann::json;
  auto base = json::parse(commands::bundled_config("example1"));

  {
    auto bad = base;
    bad["model"]["R"][0][1] = 0.3;  // asymmetric
    try {
      config::parse_config(bad.dump());
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.path == "$.model");
    }
  }
  {
    auto bad = base;
    bad["variation"]["S_rows"] = json::array({5});
    try {
      config::parse_config(bad.dump());
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.path.find("$.variation.S_rows") == 0);
    }
  }
  {
    auto bad = base;
    bad["grid"]["count"] = 48;
    CHECK_THROWS_AS(config::parse_config(bad.dump()), config_error);
  }
  {
    auto bad = base;
    bad.erase("model");
    try {
      config::parse_config(bad.dump());
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.path == "$.model");
    }
  }
  CHECK_THROWS_AS(config::parse_config("not json at all"), config_error);
}

TEST_CASE("check command: pass on the bundled example, fail without dissipation") {
  auto cfg = config::parse_config(commands::bundled_config("example1"));
  std::ostringstream out;
  CHECK(commands::cmd_check(cfg, out) == commands::exit_ok);
  CHECK(out.str().find("PASS") != std::string::npos);
  CHECK(out.str().find("Hurwitz") != std::string::npos);

  using nlohmann::json;
  auto uncoupled = json::parse(commands::bundled_config("example1"));
  uncoupled["model"]["M"] = json::array({json::array({0.0, 0.0}), json::array({0.0, 0.0})});
  auto cfg2 = config::parse_config(uncoupled.dump());
  std::ostringstream out2;
  CHECK(commands::cmd_check(cfg2, out2) == commands::exit_numerical);
  CHECK(out2.str().find("NOT Hurwitz") != std::string::npos);
}

TEST_CASE("invariant command writes covariance, spectrum and state files") {
  temp_dir tmp;
  auto cfg = config::parse_config(commands::bundled_config("example1"));
  std::ostringstream out;
  REQUIRE(commands::cmd_invariant(cfg, tmp.path.string(), out) == commands::exit_ok);

  const std::string cov = slurp((tmp.path / "invariant_covariance.csv").string());
  CHECK(cov.find("config_sha256=") != std::string::npos);
  // first data line begins with P(0,0) ~ 2.2207
  CHECK(cov.find("2.2207") != std::string::npos);

  const std::string spec = slurp((tmp.path / "spectrum.csv").string());
  CHECK(spec.find("-1.4653") != std::string::npos);

  const std::string state = slurp((tmp.path / "state.json").string());
  const auto j = nlohmann::json::parse(state);
  CHECK(j["mu"].size() == 2);
  CHECK(j["sigma"].size() == 2);
}

TEST_CASE("correct command: moments report and qpdf diagnostics") {
  temp_dir tmp;
  using nlohmann::json;
  auto small = json::parse(commands::bundled_config("example1"));
  small["grid"]["count"] = 64;
  auto cfg = config::parse_config(small.dump());

  std::ostringstream out;
  REQUIRE(commands::cmd_correct(cfg, "moments", tmp.path.string(), 0.0, out) ==
          commands::exit_ok);
  const std::string rep = slurp((tmp.path / "moment_correction.txt").string());
  CHECK(rep.find("mu_tilde") != std::string::npos);
  // position shift ~ 1.3677 within 2%
  const auto pos = rep.find("mu_tilde:");
  const double mu1 = std::stod(rep.substr(rep.find_first_of("-0123456789", pos + 9)));
  CHECK(std::abs(mu1 - 1.3677) < 0.02 * 1.3677);

  std::ostringstream out2;
  REQUIRE(commands::cmd_correct(cfg, "qpdf", tmp.path.string(), 0.0, out2) ==
          commands::exit_ok);
  CHECK(fs::exists(tmp.path / "qcf_correction.csv"));
  CHECK(fs::exists(tmp.path / "qcf_correction.bin"));
  CHECK(fs::exists(tmp.path / "qpdf_correction.csv"));
  CHECK(out2.str().find("zero-sum") != std::string::npos);
  const double zs = std::stod(out2.str().substr(out2.str().find("zero-sum:") + 9));
  CHECK(std::abs(zs) < 1e-6);

  CHECK_THROWS_AS(commands::cmd_correct(cfg, "nonsense", tmp.path.string(), 0.0, out2),
                  invalid_input);
}

TEST_CASE("correct command: transient field approaches the steady field") {
  temp_dir tmp;
  using nlohmann::json;
  auto small = json::parse(commands::bundled_config("example1"));
  small["grid"]["count"] = 32;
  small["grid"]["half_width"] = 12.0;
  auto cfg = config::parse_config(small.dump());

  std::ostringstream out;
  const double horizon = 40.0 / 1.4654;
  REQUIRE(commands::cmd_correct(cfg, "qcf", tmp.path.string(), 0.0, out) == commands::exit_ok);
  REQUIRE(commands::cmd_correct(cfg, "transient", tmp.path.string(), horizon, out) ==
          commands::exit_ok);
  const auto steady = io::read_field_binary(slurp((tmp.path / "qcf_correction.bin").string()));
  const auto trans =
      io::read_field_binary(slurp((tmp.path / "qcf_correction_transient.bin").string()));
  double max_diff = 0.0;
  for (std::size_t i = 0; i < steady.size(); ++i)
    max_diff = std::max(max_diff, std::abs(steady.cvalues[i] - trans.cvalues[i]));
  CHECK(max_diff < 1e-5);
}

TEST_CASE("bounds command writes a reproducible report") {
  temp_dir tmp;
  using nlohmann::json;
  auto fast = json::parse(commands::bundled_config("example2"));
  fast["bounds"]["mc_count"] = 20000;
  auto cfg = config::parse_config(fast.dump());

  std::ostringstream out;
  REQUIRE(commands::cmd_bounds(cfg, tmp.path.string(), out) == commands::exit_ok);
  const std::string rep1 = slurp((tmp.path / "sensitivity_report.txt").string());
  CHECK(rep1.find("mean_sensitivity") != std::string::npos);

  // byte-identical on a second run with the same seed
  std::ostringstream out2;
  REQUIRE(commands::cmd_bounds(cfg, tmp.path.string(), out2) == commands::exit_ok);
  CHECK(slurp((tmp.path / "sensitivity_report.txt").string()) == rep1);

  // mean sensitivity nonincreasing across the theta grid
  std::vector<double> sens;
  std::size_t at = 0;
  while ((at = rep1.find("mean_sensitivity: ", at)) != std::string::npos) {
    at += 18;
    sens.push_back(std::stod(rep1.substr(at)));
  }
  REQUIRE(sens.size() == 4);
  for (std::size_t i = 1; i < sens.size(); ++i) CHECK(sens[i] <= sens[i - 1]);
}

TEST_CASE("repro tables pass for both examples and catch tampering") {
  std::ostringstream out;
  CHECK(commands::cmd_repro("example1", "out_test_repro", out) == commands::exit_ok);
  CHECK(out.str().find("all rows PASS") != std::string::npos);

  std::ostringstream out2;
  CHECK(commands::cmd_repro("example2", "out_test_repro", out2) == commands::exit_ok);

  using nlohmann::json;
  auto tampered = json::parse(commands::bundled_config("example1"));
  tampered["model"]["R"][0][0] = 1.9;
  auto cfg = config::parse_config(tampered.dump());
  std::ostringstream out3;
  CHECK(commands::cmd_repro("example1", cfg, out3) == commands::exit_numerical);
  CHECK(out3.str().find("FAIL") != std::string::npos);
  fs::remove_all("out_test_repro");
}

TEST_CASE("formatted doubles round-trip") {
  for (double x : {1.0, -0.1, 2.2207, 1e-300, 123456.789012345678, 0.0}) {
    CHECK(std::stod(io::format_double(x)) == x);
  }
}

TEST_CASE("sha256 known vectors") {
  CHECK(io::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
