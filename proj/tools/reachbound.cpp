// Command-line front end: certified reach bounds, empirical reach estimation,
// and Monte Carlo tail experiments over random polynomial models.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "reachbound/condition.hpp"
#include "reachbound/federer.hpp"
#include "reachbound/minitoml.hpp"
#include "reachbound/parallel.hpp"
#include "reachbound/poly.hpp"
#include "reachbound/random_models.hpp"
#include "reachbound/reach.hpp"
#include "reachbound/version.hpp"

namespace rb = reachbound;
using json = nlohmann::ordered_json;

namespace {

json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Eigen::VectorXd parse_point(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) vals.push_back(std::stod(item));
  Eigen::VectorXd v(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) v[long(i)] = vals[i];
  return v;
}

struct PolyInput {
  std::string text;
  std::string json_file;
  int n = 0;
  std::string degrees;

  rb::PolyTuple load() const {
    if (!json_file.empty()) {
      std::ifstream in(json_file);
      if (!in) throw rb::ConfigError("cannot open polynomial file " + json_file);
      std::stringstream buf;
      buf << in.rdbuf();
      return rb::poly_from_json(buf.str());
    }
    if (text.empty()) throw rb::ConfigError("no polynomial given (use --poly or --poly-json)");
    if (n > 0 || !degrees.empty()) {
      if (n <= 0) throw rb::ConfigError("--degrees requires --n");
      std::vector<int> degs;
      std::stringstream ss(degrees);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) degs.push_back(std::stoi(item));
      if (degs.empty()) throw rb::ConfigError("--n requires --degrees");
      return rb::parse_poly_text(text, n, degs);
    }
    return rb::parse_poly_auto(text);
  }

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--poly", text, "polynomial tuple, e.g. \"x0^2+x1^2-1; x0-x1\"");
    cmd->add_option("--poly-json", json_file, "polynomial tuple as a JSON file");
    cmd->add_option("--n", n, "ambient dimension (default: inferred)");
    cmd->add_option("--degrees", degrees, "comma-separated degree bounds (default: inferred)");
  }

  json config() const {
    json c;
    if (!json_file.empty())
      c["poly_json"] = json_file;
    else
      c["poly"] = text;
    if (n > 0) c["n"] = n;
    if (!degrees.empty()) c["degrees"] = degrees;
    return c;
  }
};

json envelope(const std::string& command, json config, json result) {
  json j;
  j["tool"] = "reachbound";
  j["version"] = rb::kVersion;
  j["command"] = command;
  j["config"] = std::move(config);
  j["result"] = std::move(result);
  return j;
}

void emit_error(const std::string& type, const std::string& message) {
  json e;
  e["error"]["type"] = type;
  e["error"]["message"] = message;
  std::cerr << e.dump() << "\n";
}

// exit codes: 2 domain errors, 3 input errors
int classify(const rb::Error& err) {
  if (dynamic_cast<const rb::ParseError*>(&err) || dynamic_cast<const rb::ConfigError*>(&err) ||
      dynamic_cast<const rb::DegreeOverflow*>(&err) ||
      dynamic_cast<const rb::DimensionMismatch*>(&err))
    return 3;
  return 2;
}

std::string error_type(const rb::Error& err) {
  if (dynamic_cast<const rb::ParseError*>(&err)) return "ParseError";
  if (dynamic_cast<const rb::ConfigError*>(&err)) return "ConfigError";
  if (dynamic_cast<const rb::DegreeOverflow*>(&err)) return "DegreeOverflow";
  if (dynamic_cast<const rb::DimensionMismatch*>(&err)) return "DimensionMismatch";
  if (dynamic_cast<const rb::NonSurjective*>(&err)) return "NonSurjective";
  if (dynamic_cast<const rb::NotAZero*>(&err)) return "NotAZero";
  if (dynamic_cast<const rb::NotOnBoundary*>(&err)) return "NotOnBoundary";
  if (dynamic_cast<const rb::EmptySample*>(&err)) return "EmptySample";
  if (dynamic_cast<const rb::NoAdmissiblePairs*>(&err)) return "NoAdmissiblePairs";
  if (dynamic_cast<const rb::NoRouteApplicable*>(&err)) return "NoRouteApplicable";
  if (dynamic_cast<const rb::BudgetExceeded*>(&err)) return "BudgetExceeded";
  if (dynamic_cast<const rb::PreconditionViolated*>(&err)) return "PreconditionViolated";
  return "Error";
}

struct SeedFlags {
  std::int64_t seed = -1;
  bool auto_seed = false;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed (required unless --auto-seed)");
    cmd->add_flag("--auto-seed", auto_seed, "pick a seed and record it in the report");
  }

  std::uint64_t resolve() {
    if (seed >= 0) return std::uint64_t(seed);
    if (!auto_seed)
      throw rb::ConfigError("randomized command needs --seed or --auto-seed");
    std::random_device rd;
    const std::uint64_t s = (std::uint64_t(rd()) << 32) ^ rd();
    seed = std::int64_t(s & 0x7fffffffffffffffULL);
    return std::uint64_t(seed);
  }
};

// --- bound ------------------------------------------------------------------

int cmd_bound(const PolyInput& input, const std::string& point_text, bool global, double R,
              double r_max, double target_rel_err, std::uint64_t budget,
              const std::string& format) {
  const rb::PolyTuple f = input.load();
  json config = input.config();
  rb::ReachBoundReport rep;
  json cond_report;

  rb::GlobalCondOptions gopts;
  gopts.target_rel_err = target_rel_err;
  gopts.cell_budget = budget;

  if (!point_text.empty()) {
    rb::ReachReportOptions opts;
    opts.r_max = r_max;
    config["point"] = point_text;
    config["r_max"] = r_max;
    rep = rb::reach_report(f, parse_point(point_text), opts);
    cond_report = json::parse(rb::to_json(rb::cond_local(f, rep.zeta)));
  } else if (!global) {
    throw rb::ConfigError("bound needs --point or --global");
  }

  json cond_R;
  if (global) {
    config["R"] = R;
    config["target_rel_err"] = target_rel_err;
    config["cell_budget"] = budget;
    rb::GlobalCondResult diag;
    rep.bound_cond_global = rb::reach_lb_cond_global(f, R, gopts, &diag);
    rep.cond_R_lower = diag.lower;
    rep.cond_R_upper = diag.upper;
    if (std::isnan(rep.best) || rep.bound_cond_global > rep.best)
      rep.best = rep.bound_cond_global;
    cond_R = json::parse(rb::to_json(diag));
  }

  json result = json::parse(rb::to_json(rep));
  if (!cond_report.is_null()) result["cond_report"] = cond_report;
  if (!cond_R.is_null()) result["cond_R"] = cond_R;

  if (format == "table") {
    std::printf("%-14s %s\n", "route", "reach lower bound");
    auto row = [](const char* name, double v) {
      if (!std::isnan(v)) std::printf("%-14s %.12g\n", name, v);
    };
    row("gamma", rep.bound_gamma);
    row("kantorovich", rep.bound_kantorovich);
    row("cond_local", rep.bound_cond_local);
    row("cond_global", rep.bound_cond_global);
    row("best", rep.best);
  } else {
    std::cout << envelope("bound", config, result).dump(2) << "\n";
  }
  return 0;
}

// --- estimate ----------------------------------------------------------------

int cmd_estimate(const PolyInput& input, double R, std::size_t samples, SeedFlags& seeds,
                 double min_sep, const std::string& local_point, double local_radius,
                 const std::string& points_out, int workers) {
  const rb::PolyTuple f = input.load();
  const std::uint64_t seed = seeds.resolve();

  rb::SampleOptions sopts;
  sopts.workers = workers;
  const rb::VarietySample sample = rb::sample_variety(f, R, samples, seed, sopts);
  rb::EstimateReport est;
  if (!local_point.empty())
    est = rb::estimate_reach_local(sample, parse_point(local_point), local_radius, min_sep,
                                   workers);
  else
    est = rb::estimate_reach(sample, min_sep, workers);

  if (!points_out.empty()) {
    std::ofstream out(points_out);
    if (!out) throw rb::ConfigError("cannot open " + points_out);
    rb::export_sample_csv(sample, out);
  }

  json config = input.config();
  config["R"] = R;
  config["samples"] = samples;
  config["seed"] = seeds.seed;
  config["min_sep"] = min_sep;
  if (!local_point.empty()) {
    config["local_point"] = local_point;
    config["local_radius"] = local_radius;
  }
  config["workers"] = workers;

  json result = json::parse(rb::to_json(est));
  result["points"] = sample.size();
  result["probes"] = sample.stats.probes;
  result["rejects"] = sample.stats.rejects;
  std::cout << envelope("estimate", config, result).dump(2) << "\n";
  return 0;
}

// --- mc-tail -----------------------------------------------------------------

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rb::ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.size() > 5 && path.substr(path.size() - 5) == ".toml")
    return json(rb::minitoml::parse(buf.str()));
  try {
    return json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw rb::ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
}

rb::RandomModelSpec model_from_config(const json& jm) {
  rb::RandomModelSpec spec;
  const std::string kind = jm.value("kind", "");
  if (kind == "uniform_continuous")
    spec.kind = rb::ModelKind::UniformContinuous;
  else if (kind == "gaussian")
    spec.kind = rb::ModelKind::Gaussian;
  else if (kind == "bit_uniform")
    spec.kind = rb::ModelKind::BitUniform;
  else if (kind == "bit_general")
    spec.kind = rb::ModelKind::BitGeneral;
  else
    throw rb::ConfigError("model.kind must be one of uniform_continuous, gaussian, "
                          "bit_uniform, bit_general (got '" + kind + "')");
  spec.p = jm.value("p", 2.0);
  spec.mean_range = jm.value("mean_range", 0.0);
  spec.sigma0 = jm.value("sigma0", 1.0);
  spec.sigma1 = jm.value("sigma1", 1.0);
  spec.tau = jm.value("tau", 0);
  if ((spec.kind == rb::ModelKind::BitUniform || spec.kind == rb::ModelKind::BitGeneral) &&
      spec.tau <= 0)
    throw rb::ConfigError("model.tau must be positive for bit models");
  if (jm.contains("bit_table"))
    for (const auto& row : jm["bit_table"])
      spec.bit_table.emplace_back(row.at(0).get<long long>(), row.at(1).get<double>());
  return spec;
}

rb::Geometry geometry_from_config(const json& jg) {
  rb::Geometry geom;
  geom.n = jg.value("n", 0);
  geom.q = jg.value("q", 1);
  if (geom.n <= 0) throw rb::ConfigError("geometry.n must be positive");
  if (!jg.contains("degrees")) throw rb::ConfigError("geometry.degrees is required");
  geom.degrees = jg["degrees"].get<std::vector<int>>();
  if (int(geom.degrees.size()) != geom.q)
    throw rb::ConfigError("geometry.degrees must list q entries");
  geom.R = jg.value("R", 1.0);
  if (jg.contains("x")) {
    const auto xs = jg["x"].get<std::vector<double>>();
    geom.x.resize(long(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) geom.x[long(i)] = xs[i];
  }
  return geom;
}

int cmd_mc_tail(const std::string& config_path, std::uint64_t trials_override,
                SeedFlags& seeds, const std::string& out_prefix, int workers) {
  const json cfg = load_config_file(config_path);
  if (!cfg.contains("model") || !cfg.contains("geometry") || !cfg.contains("experiment"))
    throw rb::ConfigError("config needs [model], [geometry] and [experiment] sections");
  const rb::RandomModelSpec spec = model_from_config(cfg["model"]);
  const rb::Geometry geom = geometry_from_config(cfg["geometry"]);
  const json& je = cfg["experiment"];

  const std::string stat_name = je.value("statistic", "log_inv_reach_R");
  rb::Statistic stat;
  if (stat_name == "cond_R")
    stat = rb::Statistic::CondR;
  else if (stat_name == "cond_local")
    stat = rb::Statistic::CondLocal;
  else if (stat_name == "log_inv_reach_R")
    stat = rb::Statistic::LogInvReachR;
  else
    throw rb::ConfigError("experiment.statistic must be cond_R, cond_local or log_inv_reach_R");

  if (!je.contains("t_grid")) throw rb::ConfigError("experiment.t_grid is required");
  const auto t_grid = je["t_grid"].get<std::vector<double>>();
  std::uint64_t trials = trials_override ? trials_override : je.value("trials", std::uint64_t(0));
  if (trials == 0) throw rb::ConfigError("experiment.trials is required");
  if (seeds.seed < 0 && !seeds.auto_seed && je.contains("seed"))
    seeds.seed = je["seed"].get<std::int64_t>();
  const std::uint64_t seed = seeds.resolve();

  rb::McOptions mopts;
  mopts.workers = workers;
  const rb::TailCurve curve =
      rb::mc_tail_experiment(spec, geom, stat, t_grid, trials, seed, mopts);

  json config;
  config["config_file"] = config_path;
  config["model"] = cfg["model"];
  config["geometry"] = cfg["geometry"];
  config["statistic"] = stat_name;
  config["t_grid"] = t_grid;
  config["trials"] = trials;
  config["seed"] = seeds.seed;
  config["workers"] = workers;

  const bool powered = curve.valid_trials() >= 1000;
  bool all_pass = true;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    if (!p.theoretical.in_range) {
      std::printf("t=%-6g out of the bound's stated range (no claim)\n", p.t);
      continue;
    }
    const double bound = std::min(p.theoretical.raw, p.theoretical_min_p);
    const bool pass = curve.wilson_lo(i) <= bound;
    if (!pass) all_pass = false;
    std::printf("t=%-6g empirical=%.6g wilson=[%.6g, %.6g] theoretical=%.6g %s\n", p.t,
                curve.empirical(i), curve.wilson_lo(i), curve.wilson_hi(i), bound,
                powered ? (pass ? "PASS" : "FAIL") : "SKIP (underpowered)");
  }

  json result = json::parse(rb::to_json(curve));

  const std::string prefix = out_prefix.empty() ? "tail_curve" : out_prefix;
  {
    std::ofstream jout(prefix + ".json");
    if (!jout) throw rb::ConfigError("cannot write " + prefix + ".json");
    jout << envelope("mc-tail", config, result).dump(2) << "\n";
    std::ofstream cout_(prefix + ".csv");
    if (!cout_) throw rb::ConfigError("cannot write " + prefix + ".csv");
    rb::export_curve_csv(curve, cout_);
  }
  std::printf("wrote %s.json and %s.csv\n", prefix.c_str(), prefix.c_str());

  if (powered && !all_pass) {
    emit_error("TailAssertionFailed", "empirical exceedance exceeds the theoretical bound");
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified reach lower bounds for real algebraic varieties"};
  app.require_subcommand(1);
  app.fallthrough();  // accept top-level flags after the subcommand name
  int workers = rb::default_workers();
  app.add_option("--workers", workers, "worker threads (env REACHBOUND_WORKERS)");

  // bound
  auto* bound = app.add_subcommand("bound", "certified reach lower bounds at a zero or over a cube");
  PolyInput bound_poly;
  bound_poly.add_flags(bound);
  std::string point_text;
  bool global = false;
  double R = 1.0, r_max = 1e6, target_rel_err = 0.05;
  std::uint64_t budget = 10'000'000;
  std::string format = "json";
  bound->add_option("--point", point_text, "zero of the tuple, e.g. 1,0");
  bound->add_flag("--global", global, "add the cube-wide condition bound");
  bound->add_option("--R", R, "cube radius for --global (>= 1)");
  bound->add_option("--r-max", r_max, "radius cap for the curvature bisection");
  bound->add_option("--target-rel-err", target_rel_err, "relative gap for the global bracket");
  bound->add_option("--budget", budget, "cell budget for the global bracket");
  bound->add_option("--format", format, "json or table")
      ->check(CLI::IsMember({"json", "table"}));

  // estimate
  auto* estimate = app.add_subcommand("estimate", "empirical reach estimate from a variety sample");
  PolyInput est_poly;
  est_poly.add_flags(estimate);
  double est_R = 1.0, min_sep = -1.0, local_radius = 1.0;
  std::size_t samples = 500;
  std::string local_point, points_out;
  SeedFlags est_seeds;
  estimate->add_option("--R", est_R, "sampling cube radius");
  estimate->add_option("--samples", samples, "target sample size");
  estimate->add_option("--min-sep", min_sep, "minimum pair separation (default 1e-3 R)");
  estimate->add_option("--local", local_point, "restrict pairs to a ball around this point");
  estimate->add_option("--radius", local_radius, "ball radius for --local");
  estimate->add_option("--points-out", points_out, "write the sample as CSV");
  est_seeds.add_flags(estimate);

  // mc-tail
  auto* mc = app.add_subcommand("mc-tail", "Monte Carlo tail experiment against the closed-form bounds");
  std::string config_path, out_prefix;
  std::uint64_t trials_override = 0;
  SeedFlags mc_seeds;
  mc->add_option("--config", config_path, "experiment config (.json or .toml)")->required();
  mc->add_option("--trials", trials_override, "override the configured trial count");
  mc->add_option("--out", out_prefix, "output prefix (default tail_curve)");
  mc_seeds.add_flags(mc);

  // worstcase
  auto* wc = app.add_subcommand("worstcase", "bit-size bound on log2(1/reach_R) for integer tuples");
  long long wn = 1, wq = 1, wD = 2, wtau = 1, wR = 1;
  std::string wc_format = "plain";
  wc->add_option("--n", wn, "ambient dimension")->required();
  wc->add_option("--q", wq, "tuple length")->required();
  wc->add_option("--D", wD, "maximum degree")->required();
  wc->add_option("--tau", wtau, "coefficient bit size")->required();
  wc->add_option("--R", wR, "cube radius")->required();
  wc->add_option("--format", wc_format, "plain or json")
      ->check(CLI::IsMember({"plain", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error("CliParseError", e.what());
    return 3;
  }

  try {
    if (bound->parsed())
      return cmd_bound(bound_poly, point_text, global, R, r_max, target_rel_err, budget, format);
    if (estimate->parsed())
      return cmd_estimate(est_poly, est_R, samples, est_seeds, min_sep, local_point, local_radius,
                          points_out, workers);
    if (mc->parsed()) return cmd_mc_tail(config_path, trials_override, mc_seeds, out_prefix, workers);
    if (wc->parsed()) {
      const double v = rb::worstcase_bit_bound(wn, wq, wD, wtau, wR);
      if (wc_format == "json") {
        json config{{"n", wn}, {"q", wq}, {"D", wD}, {"tau", wtau}, {"R", wR}};
        json result;
        result["bound"] = num(v);
        result["log2_bound"] = rb::worstcase_bit_bound_log2(wn, wq, wD, wtau, wR);
        std::cout << envelope("worstcase", config, result).dump(2) << "\n";
      } else if (std::isfinite(v)) {
        std::printf("%.17g\n", v);
      } else {
        std::printf("2^%.6f\n", rb::worstcase_bit_bound_log2(wn, wq, wD, wtau, wR));
      }
      return 0;
    }
  } catch (const rb::Error& e) {
    emit_error(error_type(e), e.what());
    return classify(e);
  } catch (const std::exception& e) {
    emit_error("Error", e.what());
    return 2;
  }
  return 0;
}
