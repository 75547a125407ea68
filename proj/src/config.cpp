#include "oqho/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace oqho::config {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw config_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw config_error(path + "." + key, "missing required field");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw config_error(path, "expected a number");
  return j.get<double>();
}

Mat as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw config_error(path, "expected a nested array of numbers");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Mat m;
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || row.empty())
      throw config_error(path + "[" + std::to_string(i) + "]", "expected an array of numbers");
    if (i == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      throw config_error(path + "[" + std::to_string(i) + "]", "ragged matrix rows");
    }
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          as_number(row[k], path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return m;
}

Vec as_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw config_error(path, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

weyl::strength_function parse_strength(const json& j, int d, const std::string& path) {
  const std::string type = require(j, "type", path).get<std::string>();
  if (type == "zero") return weyl::strength_function::zero(d);
  if (type == "gaussian_mixture") {
    const json& jterms = require(j, "terms", path);
    if (!jterms.is_array() || jterms.empty())
      throw config_error(path + ".terms", "expected a non-empty array");
    std::vector<weyl::gaussian_term> terms;
    for (std::size_t i = 0; i < jterms.size(); ++i) {
      const std::string tp = path + ".terms[" + std::to_string(i) + "]";
      weyl::gaussian_term t;
      t.alpha = as_number(require(jterms[i], "alpha", tp), tp + ".alpha");
      t.gamma = as_vector(require(jterms[i], "gamma", tp), tp + ".gamma");
      t.lambda = as_matrix(require(jterms[i], "lambda", tp), tp + ".lambda");
      if (t.gamma.size() != d || t.lambda.rows() != d || t.lambda.cols() != d)
        throw config_error(tp, "term dimensions must match the S selection (d = " +
                                   std::to_string(d) + ")");
      terms.push_back(std::move(t));
    }
    try {
      return weyl::strength_function::gaussian_mixture(std::move(terms));
    } catch (const invalid_input& e) {
      throw config_error(path, e.what());
    }
  }
  if (type == "tabulated") {
    const std::string file = require(j, "path", path).get<std::string>();
    try {
      return weyl::load_tabulated_csv(file, d);
    } catch (const invalid_input& e) {
      throw config_error(path + ".path", e.what());
    }
  }
  throw config_error(path + ".type", "expected one of zero|gaussian_mixture|tabulated");
}

}  // namespace

run_config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error("$", std::string("not valid JSON: ") + e.what());
  }
  run_config cfg;
  cfg.raw_text = text;

  const json& jm = require(j, "model", "$");
  cfg.mdl.R = as_matrix(require(jm, "R", "$.model"), "$.model.R");
  cfg.mdl.M = as_matrix(require(jm, "M", "$.model"), "$.model.M");
  const json& jt = require(jm, "theta", "$.model");
  const int n = static_cast<int>(cfg.mdl.R.rows());
  if (jt.is_string()) {
    if (jt.get<std::string>() != "position-momentum")
      throw config_error("$.model.theta", "unknown convention; use \"position-momentum\"");
    if (n % 2 != 0) throw config_error("$.model.R", "n must be even");
    cfg.mdl.theta = model::ccr_position_momentum(n);
  } else {
    cfg.mdl.theta = as_matrix(jt, "$.model.theta");
  }
  try {
    cfg.mdl.validate();
  } catch (const invalid_input& e) {
    throw config_error("$.model", e.what());
  }

  const json& jv = require(j, "variation", "$");
  const json& jrows = require(jv, "S_rows", "$.variation");
  if (!jrows.is_array() || jrows.empty())
    throw config_error("$.variation.S_rows", "expected a non-empty array of variable indices");
  const int d = static_cast<int>(jrows.size());
  cfg.variation.S = Mat::Zero(d, n);
  for (int i = 0; i < d; ++i) {
    if (!jrows[i].is_number_integer())
      throw config_error("$.variation.S_rows[" + std::to_string(i) + "]",
                         "expected an integer index");
    const int col = jrows[i].get<int>();
    if (col < 0 || col >= n)
      throw config_error("$.variation.S_rows[" + std::to_string(i) + "]",
                         "index out of range [0, n)");
    cfg.variation.S(i, col) = 1.0;
  }
  cfg.variation.psi = parse_strength(require(jv, "psi", "$.variation"), d, "$.variation.psi");
  if (jv.contains("upsilon")) {
    const json& ju = jv["upsilon"];
    if (!ju.is_array() || static_cast<int>(ju.size()) != cfg.mdl.m())
      throw config_error("$.variation.upsilon", "expected one strength function per channel (m = " +
                                                    std::to_string(cfg.mdl.m()) + ")");
    for (std::size_t k = 0; k < ju.size(); ++k)
      cfg.variation.upsilon.push_back(
          parse_strength(ju[k], d, "$.variation.upsilon[" + std::to_string(k) + "]"));
  }
  try {
    cfg.variation.validate(n, cfg.mdl.m());
  } catch (const invalid_input& e) {
    throw config_error("$.variation", e.what());
  }

  if (j.contains("grid")) {
    const json& jg = j["grid"];
    if (jg.contains("count")) {
      cfg.grid_count = jg["count"].get<int>();
      if (cfg.grid_count < 32 || (cfg.grid_count & (cfg.grid_count - 1)) != 0)
        throw config_error("$.grid.count", "must be a power of two, >= 32");
    }
    if (jg.contains("half_width")) {
      cfg.grid_half_width = as_number(jg["half_width"], "$.grid.half_width");
      if (!(*cfg.grid_half_width > 0.0))
        throw config_error("$.grid.half_width", "must be positive");
    }
  }

  if (j.contains("quadrature")) {
    const json& jq = j["quadrature"];
    if (jq.contains("time_panels")) cfg.trule.panels = jq["time_panels"].get<int>();
    if (jq.contains("time_order")) cfg.trule.order = jq["time_order"].get<int>();
    if (jq.contains("lambda_fraction"))
      cfg.trule.lambda_fraction = as_number(jq["lambda_fraction"], "$.quadrature.lambda_fraction");
    if (jq.contains("w_order")) cfg.wrule.order = jq["w_order"].get<int>();
    if (cfg.trule.panels < 1 || cfg.trule.order < 2)
      throw config_error("$.quadrature", "time_panels >= 1 and time_order >= 2 required");
    if (cfg.wrule.order < 2) throw config_error("$.quadrature.w_order", "must be >= 2");
    if (!(cfg.trule.lambda_fraction > 0.0 && cfg.trule.lambda_fraction < 1.0))
      throw config_error("$.quadrature.lambda_fraction", "must lie in (0, 1)");
  }

  if (j.contains("bounds")) {
    const json& jb = j["bounds"];
    if (jb.contains("theta_weights")) {
      cfg.theta_weights.clear();
      for (std::size_t i = 0; i < jb["theta_weights"].size(); ++i)
        cfg.theta_weights.push_back(as_number(jb["theta_weights"][i],
                                              "$.bounds.theta_weights[" + std::to_string(i) + "]"));
      if (cfg.theta_weights.empty())
        throw config_error("$.bounds.theta_weights", "must not be empty");
    }
    if (jb.contains("mc_count")) {
      cfg.mc_count = jb["mc_count"].get<std::uint64_t>();
      if (cfg.mc_count == 0) throw config_error("$.bounds.mc_count", "must be positive");
    }
    if (jb.contains("lambda_fraction")) {
      cfg.lambda_fraction = as_number(jb["lambda_fraction"], "$.bounds.lambda_fraction");
      if (!(cfg.lambda_fraction > 0.0 && cfg.lambda_fraction < 1.0))
        throw config_error("$.bounds.lambda_fraction", "must lie in (0, 1)");
    }
  }

  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("outputs")) {
    const json& jo = j["outputs"];
    if (jo.contains("dir")) cfg.out_dir = jo["dir"].get<std::string>();
    if (jo.contains("formats")) {
      cfg.write_csv = false;
      cfg.write_binary = false;
      for (const auto& f : jo["formats"]) {
        const std::string name = f.get<std::string>();
        if (name == "csv")
          cfg.write_csv = true;
        else if (name == "bin")
          cfg.write_binary = true;
        else
          throw config_error("$.outputs.formats", "unknown format \"" + name + "\"");
      }
    }
  }
  return cfg;
}

run_config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("$", "cannot open configuration file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace oqho::config
