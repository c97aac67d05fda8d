// ergo: command-line front end.
//
//   ergo gnormal   --sigma 0.25,1 --f "x^2" --variance 1
//   ergo solve     --model g_ou:0.5 --f "x^2" --t-end 1 --x0 0 --out run/
//   ergo invariant --model g_ou:0.5 --f "-x^2"
//   ergo ergodic   --model g_ou:0.5 --f "x^4 - 3*x^2"
//   ergo compare   --model g_ou:0.5 --f "x^4 - 3*x^2"   (or --dictionary)
//   ergo mc        --model g_ou:0.5 --f "x^2" --t-end 1 --policy bang_bang
//   ergo paper-checks [--only 1,5,11]
//
// Exit status: 0 success, 1 check or numeric failure, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ergo/checks.hpp"
#include "ergo/config.hpp"
#include "ergo/ergo.hpp"

namespace fs = std::filesystem;
using namespace ergo;

namespace {

struct Flags {
  std::string config;
  std::string model, b, h, diffusion, sigma, f, out, policy, functional, only;
  int p = 0, nx = 0, record_paths = 0;
  double variance = 0, t_end = 0, x0 = 0, x_ref = 0, dt = 0, mc_dt = 0, tolerance = 0;
  double x_min = 0, x_max = 0;
  std::uint64_t seed = 0;
  long n_paths = 0;
  bool dictionary = false;
};

std::vector<double> split_numbers(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad number '") + item + "' in " + what);
    }
  }
  return out;
}

RunConfig resolve(const CLI::App& app, const Flags& fl) {
  RunConfig c = fl.config.empty() ? RunConfig{} : load_config(fl.config);
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--model")) apply_model_spec(c.model, fl.model);
  if (given("--b")) c.model.b = fl.b;
  if (given("--h")) c.model.h = fl.h;
  if (given("--diffusion")) c.model.sigma = fl.diffusion;
  if (given("--sigma")) {
    const auto v = split_numbers(fl.sigma, "--sigma");
    if (v.size() != 2) throw ConfigError("--sigma takes lo,hi");
    c.model.sigma_lo_sq = v[0];
    c.model.sigma_hi_sq = v[1];
  }
  if (given("--p")) c.model.p = fl.p;
  if (given("--nx")) c.grid.nx = fl.nx;
  if (given("--x-min")) c.grid.x_min = fl.x_min;
  if (given("--x-max")) c.grid.x_max = fl.x_max;
  if (given("--dt")) c.grid.dt = fl.dt;
  if (given("--f")) c.run.f = fl.f;
  if (given("--variance")) c.run.variance = fl.variance;
  if (given("--t-end")) c.run.t_end = fl.t_end;
  if (given("--x0")) c.run.x0 = fl.x0;
  if (given("--x-ref")) c.run.x_ref = fl.x_ref;
  if (given("--tolerance")) c.run.tolerance = fl.tolerance;
  if (given("--seed")) c.run.seed = fl.seed;
  if (given("--n-paths")) c.run.n_paths = fl.n_paths;
  if (given("--mc-dt")) c.run.mc_dt = fl.mc_dt;
  if (given("--policy")) c.run.policy = fl.policy;
  if (given("--functional")) c.run.functional = fl.functional;
  if (given("--record-paths")) c.run.record_paths = fl.record_paths;
  if (given("--dictionary")) c.run.dictionary = fl.dictionary;
  if (given("--only")) {
    c.run.checks.clear();
    for (double v : split_numbers(fl.only, "--only")) c.run.checks.push_back(static_cast<int>(v));
  }
  if (given("--out")) c.output.dir = fl.out;
  validate(c);
  return c;
}

// Opens <out>/<name> for writing, or returns false when no --out was given.
bool open_artifact(const RunConfig& c, const char* name, std::ofstream& os) {
  if (c.output.dir.empty()) return false;
  fs::create_directories(c.output.dir);
  const auto path = fs::path(c.output.dir) / name;
  os.open(path);
  if (!os) throw Error("cannot write " + path.string());
  return true;
}

void print_kv(std::initializer_list<std::pair<const char*, double>> kv) {
  bool first = true;
  for (const auto& [k, v] : kv) {
    std::printf("%s%s=%.10g", first ? "" : " ", k, v);
    first = false;
  }
  std::printf("\n");
}

InvariantOptions invariant_options(const RunConfig& c) {
  InvariantOptions o;
  o.grid = c.grid;
  o.x_ref = c.run.x_ref;
  o.tol = c.run.tolerance;
  return o;
}

ErgodicOptions ergodic_options(const RunConfig& c) {
  ErgodicOptions o;
  o.grid = c.grid;
  o.x_ref = c.run.x_ref;
  o.tol = c.run.tolerance;
  return o;
}

int cmd_gnormal(const RunConfig& c) {
  const GFunction g(c.model.sigma_lo_sq, c.model.sigma_hi_sq);
  const double v = g_normal_expectation(g, build_expr(c.run.f, "f"), c.run.variance, c.grid);
  print_kv({{"value", v}, {"variance", c.run.variance}});
  return 0;
}

int cmd_solve(const RunConfig& c) {
  const auto model = build_model(c.model);
  const auto sol = solve(model, build_expr(c.run.f, "f"), c.run.t_end, c.grid);
  print_kv({{"u", sol.evaluate(c.run.t_end, c.run.x0)},
            {"t", c.run.t_end},
            {"x", c.run.x0},
            {"dt", sol.grid().dt},
            {"slices", static_cast<double>(sol.slice_count())}});
  std::ofstream os;
  if (open_artifact(c, "slices.csv", os)) write_slices_csv(sol, os);
  return 0;
}

int cmd_invariant(const RunConfig& c) {
  const auto model = build_model(c.model);
  const auto r = invariant_value(model, build_expr(c.run.f, "f"), invariant_options(c));
  print_kv({{"lambda_bar", r.lambda_bar},
            {"rate", r.rate_estimate},
            {"x_defect", r.x_dependence_defect},
            {"horizon", r.horizon},
            {"defect", r.convergence_defect},
            {"cesaro", r.cesaro_mean},
            {"eta", r.eta_estimate}});
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::ofstream os;
  if (open_artifact(c, "trace.csv", os)) write_trace_csv(r, os);
  return 0;
}

int cmd_ergodic(const RunConfig& c) {
  const auto model = build_model(c.model);
  const auto r = ergodic_value(model, build_expr(c.run.f, "f"), ergodic_options(c));
  print_kv({{"lambda", r.lambda},
            {"lambda_time_avg", r.lambda_time_avg},
            {"lambda_discount", r.lambda_discount},
            {"method_disagreement", r.method_disagreement},
            {"horizon", r.horizon},
            {"defect", r.convergence_defect}});
  std::ofstream os;
  if (open_artifact(c, "trace.csv", os)) {
    // Slope estimates over [T, 2T]; defect is the change from the previous horizon.
    os << "t,value,defect\n";
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (const auto& p : r.slope_trace) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g\n", p.t, p.value, std::fabs(p.value - prev));
      os << buf;
      prev = p.value;
    }
  }
  return 0;
}

int cmd_compare(const RunConfig& c) {
  const auto model = build_model(c.model);
  MeasureOptions mo{invariant_options(c), ergodic_options(c)};
  std::vector<ReportEntry> entries;
  int status = 0;
  if (c.run.dictionary) {
    ReportOptions ro;
    ro.measure = mo;
    const auto rep = sublinearity_report(model, default_dictionary(), ro);
    entries = rep.entries;
    for (const auto& e : rep.entries)
      std::fprintf(stderr, "%-18s lambda_bar=% .6f lambda=% .6f gap=% .6f\n", e.label.c_str(),
                   e.lambda_bar, e.lambda, e.gap);
    for (const auto& s : rep.sublinearity_violations) std::fprintf(stderr, "violation: %s\n", s.c_str());
    for (const auto& s : rep.ordering_violations) std::fprintf(stderr, "violation: %s\n", s.c_str());
    print_kv({{"entries", static_cast<double>(rep.entries.size())},
              {"checks", static_cast<double>(rep.checks)},
              {"sublinearity_violations", static_cast<double>(rep.sublinearity_violations.size())},
              {"ordering_violations", static_cast<double>(rep.ordering_violations.size())}});
    status = rep.passed() ? 0 : 1;
  } else {
    const auto r = compare(model, build_expr(c.run.f, "f"), mo);
    entries.push_back({c.run.f, r.lambda_bar, r.lambda, r.gap});
    print_kv({{"lambda_bar", r.lambda_bar}, {"lambda", r.lambda}, {"gap", r.gap}});
  }
  std::ofstream os;
  if (open_artifact(c, "report.csv", os)) write_report_csv(entries, os);
  return status;
}

int cmd_mc(const RunConfig& c) {
  const auto model = build_model(c.model);
  const Expr f = build_expr(c.run.f, "f");
  McParams mp;
  mp.dt = c.run.mc_dt;
  mp.n_paths = c.run.n_paths;
  mp.seed = c.run.seed;
  mp.functional = c.run.functional == "running" ? Functional::running : Functional::terminal;
  mp.record_paths = c.run.record_paths;

  std::optional<PdeSolution> sol;
  auto pde = [&] {
    if (!sol) {
      SolveOptions so;
      so.slices.uniform = 200;
      sol = solve(model, f, c.run.t_end, c.grid, std::nullopt, so);
    }
    return &*sol;
  };
  const auto& g = model.g;
  McEstimate est;
  if (c.run.policy == "lower_bound") {
    const std::vector<ControlPolicy> policies{ControlPolicy::constant(g.sigma_lo_sq(), g),
                                              ControlPolicy::constant(g.sigma_hi_sq(), g),
                                              bang_bang_policy(model, *pde())};
    auto lb = lower_bound(model, f, c.run.x0, c.run.t_end, policies, mp);
    est = std::move(lb.estimates[lb.best]);
    est.mean = lb.value;
  } else {
    const ControlPolicy policy = c.run.policy == "lo"   ? ControlPolicy::constant(g.sigma_lo_sq(), g)
                                 : c.run.policy == "hi" ? ControlPolicy::constant(g.sigma_hi_sq(), g)
                                                        : bang_bang_policy(model, *pde());
    est = simulate(model, policy, c.run.x0, f, c.run.t_end, mp);
  }
  print_kv({{"mean", est.mean},
            {"se", est.std_error},
            {"n_paths", static_cast<double>(est.n_paths)},
            {"dt", est.dt},
            {"seed", static_cast<double>(est.seed)}});
  std::ofstream os;
  if (c.run.record_paths > 0 && open_artifact(c, "paths.csv", os)) write_paths_csv(est, os);
  return 0;
}

int cmd_checks(const RunConfig& c) {
  const std::set<int> only(c.run.checks.begin(), c.run.checks.end());
  const auto results = run_checks(only, c.run.seed, &std::cout);
  int failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::printf("checks=%zu passed=%zu failed=%d\n", results.size(), results.size() - failed, failed);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sublinear expectations of 1-D G-diffusions: PDE solver, long-time limits, Monte Carlo"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.fallthrough();
  Flags fl;
  app.add_option("--config", fl.config, "JSON run configuration; flags override it");
  app.add_option("--model", fl.model, "g_ou:<alpha> | gou_bracket:<m> | dirac | custom");
  app.add_option("--b", fl.b, "drift expression (custom model)");
  app.add_option("--h", fl.h, "d<B> coefficient expression (custom model)");
  app.add_option("--diffusion", fl.diffusion, "dB coefficient expression (custom model)");
  app.add_option("--sigma", fl.sigma, "variance interval lo,hi");
  app.add_option("--p", fl.p, "growth order of test functions");
  app.add_option("--f", fl.f, "test function expression in x");
  app.add_option("--variance", fl.variance, "variance for gnormal");
  app.add_option("--t-end", fl.t_end, "final time");
  app.add_option("--x0", fl.x0, "evaluation / starting point");
  app.add_option("--x-ref", fl.x_ref, "reference point of long-time extraction");
  app.add_option("--tolerance", fl.tolerance, "long-time convergence tolerance");
  app.add_option("--nx", fl.nx, "grid nodes");
  app.add_option("--x-min", fl.x_min, "left end of the domain");
  app.add_option("--x-max", fl.x_max, "right end of the domain");
  app.add_option("--dt", fl.dt, "explicit PDE time step (default: from the CFL bound)");
  app.add_option("--seed", fl.seed, "Monte Carlo seed");
  app.add_option("--n-paths", fl.n_paths, "Monte Carlo paths");
  app.add_option("--mc-dt", fl.mc_dt, "Euler-Maruyama step");
  app.add_option("--policy", fl.policy, "bang_bang | lo | hi | lower_bound");
  app.add_option("--functional", fl.functional, "terminal | running");
  app.add_option("--record-paths", fl.record_paths, "dump the first k paths to paths.csv");
  app.add_flag("--dictionary", fl.dictionary, "compare: run the built-in test dictionary");
  app.add_option("--only", fl.only, "paper-checks: comma-separated check numbers");
  app.add_option("--out", fl.out, "directory for CSV artifacts");

  using Command = int (*)(const RunConfig&);
  const std::pair<const char*, Command> commands[] = {
      {"gnormal", cmd_gnormal}, {"solve", cmd_solve},     {"invariant", cmd_invariant},
      {"ergodic", cmd_ergodic}, {"compare", cmd_compare}, {"mc", cmd_mc},
      {"paper-checks", cmd_checks},
  };
  const char* help[] = {"G-normal expectation E^[f(sqrt(v) B_1)]",
                        "solve the PDE to t_end and evaluate at x0",
                        "invariant value lim E^[f(X_t)]",
                        "ergodic value lim (1/T) E^[int_0^T f(X_s) ds]",
                        "invariant vs ergodic value (or the full dictionary)",
                        "scenario Monte Carlo under a variance policy",
                        "run the verification suite"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i)
    subs.push_back(app.add_subcommand(commands[i].first, help[i]));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = resolve(app, fl);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return commands[i].second(cfg);
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
