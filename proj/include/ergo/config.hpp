#pragma once

// Run configuration shared by the CLI: a JSON document with model, grid,
// run and output blocks. Unknown keys are rejected.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ergo/error.hpp"
#include "ergo/expr.hpp"
#include "ergo/gfunc.hpp"
#include "ergo/model.hpp"
#include "ergo/pde.hpp"

namespace ergo {

struct ModelConfig {
  std::string name = "g_ou";
  std::vector<double> params{0.5};
  std::string b;  // custom only
  std::string h;
  std::string sigma;
  double sigma_lo_sq = 0.25;
  double sigma_hi_sq = 1.0;
  int p = 2;
};

struct RunBlock {
  std::string f = "x^2";
  double t_end = 1.0;
  double variance = 1.0;
  double x0 = 0.0;
  double x_ref = 0.0;
  double tolerance = 1e-3;
  std::uint64_t seed = 20240601;
  long n_paths = 100000;
  double mc_dt = 1e-3;
  std::string functional = "terminal";  // terminal | running
  std::string policy = "bang_bang";     // bang_bang | lo | hi | lower_bound
  int record_paths = 0;
  bool dictionary = false;  // compare: run the whole test dictionary
  std::vector<int> checks;  // paper-checks: subset, empty = all
};

struct OutputBlock {
  std::string dir;  // empty: no CSV output
};

struct RunConfig {
  ModelConfig model;
  Grid1D grid;
  RunBlock run;
  OutputBlock output;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::string_view block,
                           std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) throw ConfigError("'" + std::string(block) + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown key '" + std::string(block) + "." + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, std::string_view block) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(block) + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  detail::reject_unknown(doc, "config", {"model", "grid", "run", "output"});
  RunConfig c;
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    detail::reject_unknown(m, "model",
                           {"name", "params", "b", "h", "sigma", "sigma_lo_sq", "sigma_hi_sq", "p"});
    detail::read(m, "name", c.model.name, "model");
    if (c.model.name != "g_ou") c.model.params.clear();
    detail::read(m, "params", c.model.params, "model");
    detail::read(m, "b", c.model.b, "model");
    detail::read(m, "h", c.model.h, "model");
    detail::read(m, "sigma", c.model.sigma, "model");
    detail::read(m, "sigma_lo_sq", c.model.sigma_lo_sq, "model");
    detail::read(m, "sigma_hi_sq", c.model.sigma_hi_sq, "model");
    detail::read(m, "p", c.model.p, "model");
  }
  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    detail::reject_unknown(g, "grid", {"x_min", "x_max", "nx", "dt"});
    detail::read(g, "x_min", c.grid.x_min, "grid");
    detail::read(g, "x_max", c.grid.x_max, "grid");
    detail::read(g, "nx", c.grid.nx, "grid");
    detail::read(g, "dt", c.grid.dt, "grid");
  }
  if (doc.contains("run")) {
    const auto& r = doc["run"];
    detail::reject_unknown(r, "run",
                           {"f", "t_end", "variance", "x0", "x_ref", "tolerance", "seed", "n_paths",
                            "mc_dt", "functional", "policy", "record_paths", "dictionary",
                            "checks"});
    detail::read(r, "f", c.run.f, "run");
    detail::read(r, "t_end", c.run.t_end, "run");
    detail::read(r, "variance", c.run.variance, "run");
    detail::read(r, "x0", c.run.x0, "run");
    detail::read(r, "x_ref", c.run.x_ref, "run");
    detail::read(r, "tolerance", c.run.tolerance, "run");
    detail::read(r, "seed", c.run.seed, "run");
    detail::read(r, "n_paths", c.run.n_paths, "run");
    detail::read(r, "mc_dt", c.run.mc_dt, "run");
    detail::read(r, "functional", c.run.functional, "run");
    detail::read(r, "policy", c.run.policy, "run");
    detail::read(r, "record_paths", c.run.record_paths, "run");
    detail::read(r, "dictionary", c.run.dictionary, "run");
    detail::read(r, "checks", c.run.checks, "run");
  }
  if (doc.contains("output")) {
    const auto& o = doc["output"];
    detail::reject_unknown(o, "output", {"dir"});
    detail::read(o, "dir", c.output.dir, "output");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// "g_ou:0.5", "gou_bracket:2", "dirac", "custom".
inline void apply_model_spec(ModelConfig& m, std::string_view spec) {
  const auto colon = spec.find(':');
  m.name = std::string(spec.substr(0, colon));
  m.params.clear();
  if (colon == std::string_view::npos) return;
  std::string rest(spec.substr(colon + 1));
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      m.params.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad model parameter '" + item + "' in '" + std::string(spec) + "'");
    }
  }
}

/// Expression errors, model errors and CFL violations all surface as
/// ConfigError here, before any computation starts.
inline GDiffusionModel build_model(const ModelConfig& mc) {
  try {
    const GFunction g(mc.sigma_lo_sq, mc.sigma_hi_sq);
    if (mc.name == "custom") {
      if (mc.b.empty() || mc.h.empty() || mc.sigma.empty())
        throw ConfigError("model 'custom' needs b, h and sigma expressions");
      return make_custom(mc.b, mc.h, mc.sigma, g, mc.p);
    }
    return make_builtin(mc.name, std::span<const double>(mc.params), g, mc.p);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

inline Expr build_expr(const std::string& src, const char* what) {
  try {
    return parse(src);
  } catch (const ParseError& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

/// Checks everything that can be checked without running: expressions parse,
/// the model is well formed, the grid is valid and an explicit dt satisfies
/// the monotonicity bound.
inline void validate(const RunConfig& c) {
  const auto model = build_model(c.model);
  build_expr(c.run.f, "run.f");
  try {
    c.grid.validate();
    Marcher probe(model, c.grid);
  } catch (const Error& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  if (c.run.functional != "terminal" && c.run.functional != "running")
    throw ConfigError("run.functional must be 'terminal' or 'running'");
  if (c.run.policy != "bang_bang" && c.run.policy != "lo" && c.run.policy != "hi" &&
      c.run.policy != "lower_bound")
    throw ConfigError("run.policy must be one of bang_bang, lo, hi, lower_bound");
  if (!(c.run.t_end >= 0.0)) throw ConfigError("run.t_end must be >= 0");
  if (!(c.run.variance >= 0.0)) throw ConfigError("run.variance must be >= 0");
  if (!(c.run.tolerance > 0.0)) throw ConfigError("run.tolerance must be positive");
  if (c.run.n_paths < 2) throw ConfigError("run.n_paths must be >= 2");
  if (!(c.run.mc_dt > 0.0)) throw ConfigError("run.mc_dt must be positive");
  if (c.run.record_paths < 0) throw ConfigError("run.record_paths must be >= 0");
}

}  // namespace ergo
