// stlrisk: formulas, risks, tightening, MILP export and the two-agent
// experiment from one JSON config.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "stlrisk/error.hpp"
#include "stlrisk/formula.hpp"
#include "stlrisk/milp.hpp"
#include "stlrisk/mpc.hpp"
#include "stlrisk/risk_measures.hpp"
#include "stlrisk/risk_semantics.hpp"
#include "stlrisk/stl_encoding.hpp"
#include "stlrisk/tightening.hpp"

using json = nlohmann::ordered_json;
using namespace stlrisk;
namespace fs = std::filesystem;

namespace {

constexpr int kConfigVersion = 1;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCategory::Config, msg); }

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Infeasible: return 3;
    case ErrorCategory::Numeric: return 4;
    default: return 2;
  }
}

// ---------------------------------------------------------------------------
// config readers

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) config_error(where + " must be an object");
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) config_error("unknown key '" + k + "' in " + where);
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) config_error(where + " must be a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) config_error(where + " must be an integer");
  return v.get<int>();
}

Eigen::VectorXd vector(const json& v, const std::string& where) {
  if (!v.is_array()) config_error(where + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = number(v[i], where + "[" + std::to_string(i) + "]");
  }
  return out;
}

Eigen::MatrixXd matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) config_error(where + " must be a nonempty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const Eigen::VectorXd row = vector(v[r], where + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols) config_error(where + " has ragged rows");
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

PredicateEnv predicates(const json& cfg) {
  PredicateEnv env;
  if (!cfg.contains("predicates")) return env;
  const json& p = cfg["predicates"];
  if (!p.is_object()) config_error("predicates must map names to {a, b}");
  for (const auto& [name, def] : p.items()) {
    allow_keys(def, "predicate " + name, {"a", "b"});
    if (!def.contains("a") || !def.contains("b")) config_error("predicate " + name + " needs a and b");
    env.emplace(name, AffinePredicate(vector(def["a"], name + ".a"), number(def["b"], name + ".b"), name));
  }
  return env;
}

Formula formula(const json& cfg, const std::string& override_text) {
  const PredicateEnv env = predicates(cfg);
  std::string text = override_text;
  if (text.empty()) {
    if (!cfg.contains("formula") || !cfg["formula"].is_string()) config_error("formula text is required");
    text = cfg["formula"].get<std::string>();
  }
  ParseOptions opts;
  opts.env = &env;
  if (cfg.contains("period")) opts.period = number(cfg["period"], "period");
  return parse(text, opts);
}

struct SystemConfig {
  LtvSystem sys;
  Eigen::VectorXd x0;
};

// Time-invariant matrices or per-step lists ("A": [[..]] or [[[..]], ...]).
template <class T, class Read>
std::vector<T> per_step(const json& v, const std::string& where, Read read, bool is_matrix) {
  const bool list = v.is_array() && !v.empty() && v[0].is_array() && (!is_matrix || (!v[0].empty() && v[0][0].is_array()));
  std::vector<T> out;
  if (list) {
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read(v[i], where + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(read(v, where));
  }
  return out;
}

SystemConfig system(const json& cfg, int min_horizon) {
  if (!cfg.contains("system")) config_error("system section is required");
  const json& s = cfg["system"];
  allow_keys(s, "system", {"A", "B", "w_mean", "w_cov", "x0", "horizon"});
  for (const char* k : {"A", "B", "x0"}) {
    if (!s.contains(k)) config_error(std::string("system.") + k + " is required");
  }
  auto A = per_step<Eigen::MatrixXd>(s["A"], "system.A", matrix, true);
  auto B = per_step<Eigen::MatrixXd>(s["B"], "system.B", matrix, true);
  const auto n = A.front().rows();
  auto w_mean = s.contains("w_mean") ? per_step<Eigen::VectorXd>(s["w_mean"], "system.w_mean", vector, false)
                                     : std::vector<Eigen::VectorXd>{Eigen::VectorXd::Zero(n)};
  auto w_cov = s.contains("w_cov") ? per_step<Eigen::MatrixXd>(s["w_cov"], "system.w_cov", matrix, true)
                                   : std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(n, n)};
  const int horizon = s.contains("horizon") ? integer(s["horizon"], "system.horizon") : min_horizon;
  if (horizon < min_horizon) {
    config_error("system.horizon " + std::to_string(horizon) + " is shorter than the formula horizon " +
                 std::to_string(min_horizon));
  }
  SystemConfig out{LtvSystem(std::move(A), std::move(B), std::move(w_mean), std::move(w_cov), horizon),
                   vector(s["x0"], "system.x0")};
  if (out.x0.size() != out.sys.state_dim()) throw Error(ErrorCategory::Dimension, "system.x0 has the wrong size");
  return out;
}

RiskBounds deltas(const json& cfg) {
  RiskBounds b;
  if (!cfg.contains("deltas")) return b;
  const json& d = cfg["deltas"];
  allow_keys(d, "deltas", {"default", "by_name"});
  if (d.contains("default")) b.default_delta = number(d["default"], "deltas.default");
  if (d.contains("by_name")) {
    if (!d["by_name"].is_object()) config_error("deltas.by_name must be an object");
    for (const auto& [k, v] : d["by_name"].items()) b.by_name[k] = number(v, "deltas.by_name." + k);
  }
  auto check = [](double v) {
    if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCategory::Domain, "risk bounds must lie in (0, 1)");
  };
  check(b.default_delta);
  for (const auto& [k, v] : b.by_name) check(v);
  return b;
}

std::vector<Eigen::VectorXd> inputs(const json& section, const LtvSystem& sys, int steps) {
  std::vector<Eigen::VectorXd> u(static_cast<std::size_t>(steps), Eigen::VectorXd::Zero(sys.input_dim()));
  if (!section.contains("inputs")) return u;
  const json& v = section["inputs"];
  if (!v.is_array() || v.size() != static_cast<std::size_t>(steps)) {
    config_error("inputs needs one entry per step (" + std::to_string(steps) + ")");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    u[i] = vector(v[i], "inputs[" + std::to_string(i) + "]");
    if (u[i].size() != sys.input_dim()) throw Error(ErrorCategory::Dimension, "input has the wrong size");
  }
  return u;
}

DisturbanceLaw law(const std::string& s) {
  if (s == "gaussian") return DisturbanceLaw::Gaussian;
  if (s == "student_t3") return DisturbanceLaw::StudentT3;
  config_error("law must be gaussian or student_t3");
}

ExperimentConfig experiment(const json& cfg) {
  const json e = cfg.contains("experiment") ? cfg["experiment"] : json::object();
  allow_keys(e, "experiment",
             {"profile", "runs", "seed", "threads", "dt_sys", "dt_ctrl", "horizon", "run_steps", "w_input",
              "w_goal", "u_max", "position_limit", "velocity_limit", "saturation_seconds", "anchoring",
              "disturbance_variance", "delta_obstacle", "delta_goal", "delta_formation", "agent1_start",
              "agent2_start", "obstacle_center", "goal_center", "discretization", "max_nodes", "max_seconds"});
  const std::string profile = e.value("profile", "scaled");
  ExperimentConfig c;
  if (profile == "scaled") c = ExperimentConfig::scaled();
  else if (profile == "full") c = ExperimentConfig::full_resolution();
  else config_error("experiment.profile must be scaled or full");

  auto num = [&](const char* k, double& dst) {
    if (e.contains(k)) dst = number(e[k], std::string("experiment.") + k);
  };
  auto whole = [&](const char* k, int& dst) {
    if (e.contains(k)) dst = integer(e[k], std::string("experiment.") + k);
  };
  auto point = [&](const char* k, Eigen::Vector2d& dst) {
    if (!e.contains(k)) return;
    const Eigen::VectorXd v = vector(e[k], std::string("experiment.") + k);
    if (v.size() != 2) config_error(std::string("experiment.") + k + " needs two coordinates");
    dst = v;
  };
  whole("runs", c.runs);
  if (e.contains("seed")) {
    if (!e["seed"].is_number_unsigned()) config_error("experiment.seed must be a nonnegative integer");
    c.seed = e["seed"].get<std::uint64_t>();
  }
  whole("threads", c.threads);
  num("dt_sys", c.mpc.dt_sys);
  num("dt_ctrl", c.mpc.dt_ctrl);
  whole("horizon", c.mpc.horizon);
  whole("run_steps", c.mpc.run_steps);
  num("w_input", c.mpc.w_input);
  num("w_goal", c.mpc.w_goal);
  if (e.contains("u_max")) c.mpc.u_max = Eigen::VectorXd::Constant(4, number(e["u_max"], "experiment.u_max"));
  if (e.contains("position_limit") || e.contains("velocity_limit")) {
    double pos = 5.0, vel = 1.5;
    num("position_limit", pos);
    num("velocity_limit", vel);
    for (int g = 0; g < 2; ++g) {
      c.mpc.state_lower.segment(4 * g, 4) << -pos, -pos, -vel, -vel;
      c.mpc.state_upper.segment(4 * g, 4) << pos, pos, vel, vel;
    }
  }
  num("saturation_seconds", c.mpc.saturation_seconds);
  if (e.contains("anchoring")) {
    const std::string a = e["anchoring"].get<std::string>();
    if (a == "global") c.mpc.anchoring = TimeAnchoring::Global;
    else if (a == "per_window") c.mpc.anchoring = TimeAnchoring::PerWindow;
    else config_error("experiment.anchoring must be global or per_window");
  }
  num("disturbance_variance", c.disturbance_variance);
  num("delta_obstacle", c.delta_obstacle);
  num("delta_goal", c.delta_goal);
  num("delta_formation", c.delta_formation);
  point("agent1_start", c.agent1_start);
  point("agent2_start", c.agent2_start);
  point("obstacle_center", c.obstacle_center);
  point("goal_center", c.goal_center);
  if (e.contains("discretization")) {
    const std::string d = e["discretization"].get<std::string>();
    if (d == "euler") c.discretization = Discretization::ForwardEuler;
    else if (d == "zoh") c.discretization = Discretization::ExactZoh;
    else config_error("experiment.discretization must be euler or zoh");
  }
  if (e.contains("max_nodes")) c.mpc.limits.max_nodes = integer(e["max_nodes"], "experiment.max_nodes");
  num("max_seconds", c.mpc.limits.max_seconds);

  if (c.runs < 1) config_error("experiment.runs must be positive");
  if (!(c.disturbance_variance >= 0.0)) config_error("experiment.disturbance_variance must be nonnegative");
  for (double d : {c.delta_obstacle, c.delta_goal, c.delta_formation}) {
    if (!(d > 0.0 && d < 1.0)) throw Error(ErrorCategory::Domain, "risk bounds must lie in (0, 1)");
  }
  c.controller().validate(8, 4);
  if (horizon(two_agent_formula(c, c.mpc.dt_ctrl)) > c.mpc.horizon) {
    config_error("experiment.horizon is shorter than the mission formula");
  }
  return c;
}

json load(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!cfg.is_object()) config_error("config must be a JSON object");
  if (!cfg.contains("version")) config_error("config needs a version field");
  if (cfg["version"] != kConfigVersion) config_error("unsupported config version");
  allow_keys(cfg, "config",
             {"version", "predicates", "formula", "period", "system", "deltas", "risk", "encode", "experiment",
              "simulate"});
  return cfg;
}

// ---------------------------------------------------------------------------
// output helpers

std::string sign_text(Sign s) { return s == Sign::Minus ? "-" : "+"; }

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) config_error("cannot write '" + path.string() + "'");
  out << text;
}

json vectors(const std::vector<Eigen::VectorXd>& xs) {
  json out = json::array();
  for (const auto& x : xs) out.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  return out;
}

json summary(const SimResult& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    runs.push_back({{"seed", run.seed},
                    {"safety_violated", run.safety_violated},
                    {"goal_reached", run.goal_reached},
                    {"infeasible_windows", run.infeasible_windows},
                    {"safety_margin", run.safety_margin},
                    {"nodes", run.nodes},
                    {"seconds", run.seconds}});
  }
  const double n = std::max<std::size_t>(1, r.runs.size());
  return {{"mode", std::string(to_string(r.mode))},
          {"runs", r.runs.size()},
          {"safety_violations", r.safety_violations},
          {"goal_reached", r.goal_reached},
          {"runs_with_infeasibility", r.runs_with_infeasibility},
          {"violation_rate", r.safety_violations / n},
          {"goal_rate", r.goal_reached / n},
          {"median_safety_margin", r.median_safety_margin()},
          {"seconds", r.seconds},
          {"per_run", runs}};
}

struct Options {
  std::string config;
  std::string out;
  std::string formula_text;
  std::string mode = "tightened";
  long long seed = -1;
  int verbose = 0;
};

void log(const Options& o, const std::string& msg) {
  if (o.verbose > 0) std::cerr << msg << '\n';
}

// ---------------------------------------------------------------------------
// subcommands

json cmd_parse(const Options& o) {
  const json cfg = o.config.empty() ? json{{"version", kConfigVersion}} : load(o.config);
  const Formula f = formula(cfg, o.formula_text);
  return {{"formula", print(f)}, {"horizon", horizon(f)}};
}

json cmd_risk(const Options& o) {
  const json cfg = load(o.config);
  const Formula f = formula(cfg, o.formula_text);
  const int len = horizon(f);
  const SystemConfig sc = system(cfg, len);
  const json r = cfg.contains("risk") ? cfg["risk"] : json::object();
  allow_keys(r, "risk", {"measures", "samples", "law", "seed", "inputs", "start"});
  std::vector<RiskSpec> specs;
  if (r.contains("measures")) {
    for (const auto& m : r["measures"]) specs.push_back(RiskSpec::from_string(m.get<std::string>()));
  } else {
    specs = {RiskSpec::expectation(), RiskSpec::var(0.1), RiskSpec::cvar(0.1), RiskSpec::evar(0.1),
             RiskSpec::worst_case()};
  }
  for (const auto& s : specs) {
    if (!s.is_empirical()) config_error("drvar has no empirical value; use tighten");
  }
  const int samples = r.contains("samples") ? integer(r["samples"], "risk.samples") : 1000;
  if (samples < 1) config_error("risk.samples must be positive");
  const int start = r.contains("start") ? integer(r["start"], "risk.start") : 0;
  if (start < 0) config_error("risk.start must be nonnegative");
  const std::uint64_t seed = o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : r.value("seed", 1ULL);
  const int steps = start + len;
  if (steps > sc.sys.horizon()) config_error("system.horizon does not cover start + formula horizon");
  const auto u = inputs(r, sc.sys, steps);
  const Ensemble ens = simulate_ensemble(sc.sys, sc.x0, u, steps, samples, law(r.value("law", "gaussian")), seed);
  json table = json::array();
  for (const auto& s : specs) table.push_back({{"measure", s.to_string()}, {"risk", stl_risk(ens, start, f, s)}});
  return {{"formula", print(f)}, {"samples", samples}, {"seed", seed}, {"risks", table}};
}

json cmd_tighten(const Options& o) {
  const json cfg = load(o.config);
  const Formula f = formula(cfg, o.formula_text);
  const SystemConfig sc = system(cfg, horizon(f));
  const RiskBounds b = deltas(cfg);
  const Formula g = tighten_formula(f, sc.sys, b, 0);
  json rows = json::array();
  std::string csv = "predicate,sign,time,delta,margin\n";
  char buf[128];
  for (const auto& r : margin_table(f, sc.sys, b, 0)) {
    rows.push_back({{"predicate", r.predicate}, {"sign", sign_text(r.sign)}, {"time", r.time},
                    {"delta", r.delta}, {"margin", r.margin}});
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%.10g,%.10g\n", r.predicate.c_str(), sign_text(r.sign).c_str(), r.time,
                  r.delta, r.margin);
    csv += buf;
  }
  if (!o.out.empty()) write_file(fs::path(o.out) / "margins.csv", csv);
  return {{"formula", print(f)}, {"tightened", print(g)}, {"margins", rows}};
}

struct Encoded {
  StlEncoding enc;
  Formula planned;
};

Encoded encode(const json& cfg, const Options& o) {
  const Formula f = formula(cfg, o.formula_text);
  const int len = horizon(f);
  const SystemConfig sc = system(cfg, len);
  const json e = cfg.contains("encode") ? cfg["encode"] : json::object();
  allow_keys(e, "encode",
             {"tighten", "simplify", "condense", "split_inputs", "big_m", "strict_eps", "input_lower", "input_upper",
              "state_lower", "state_upper", "horizon", "input_cost"});
  Formula planned = f;
  if (e.value("tighten", false)) planned = tighten_formula(f, sc.sys, deltas(cfg), 0);
  EncodeOptions eo;
  eo.simplify = e.value("simplify", false);
  eo.condense = e.value("condense", false);
  eo.split_inputs = e.value("split_inputs", false);
  if (e.contains("big_m")) eo.big_m = number(e["big_m"], "encode.big_m");
  if (e.contains("strict_eps")) eo.strict_eps = number(e["strict_eps"], "encode.strict_eps");
  if (e.contains("input_lower")) eo.input_lower = vector(e["input_lower"], "encode.input_lower");
  if (e.contains("input_upper")) eo.input_upper = vector(e["input_upper"], "encode.input_upper");
  if (e.contains("state_lower")) eo.state_lower = {vector(e["state_lower"], "encode.state_lower")};
  if (e.contains("state_upper")) eo.state_upper = {vector(e["state_upper"], "encode.state_upper")};
  const int H = e.contains("horizon") ? integer(e["horizon"], "encode.horizon") : len;
  if (H > sc.sys.horizon()) config_error("encode.horizon exceeds system.horizon");
  Encoded out{encode_deterministic_stl(planned, sc.sys, {sc.x0}, H, eo), planned};
  // Optional L1 input cost (needs split inputs to be exact).
  if (e.contains("input_cost")) {
    const double w = number(e["input_cost"], "encode.input_cost");
    for (std::size_t s = 0; s < out.enc.input_vars.size(); ++s) {
      for (int v : out.enc.input_vars[s]) out.enc.model.add_objective(v, w);
      for (int v : out.enc.input_neg_vars[s]) out.enc.model.add_objective(v, w);
    }
  }
  return out;
}

json export_experiment_lps(const ExperimentConfig& base, const fs::path& dir) {
  // Full-resolution first-window models for external solvers.
  ExperimentConfig full = ExperimentConfig::full_resolution();
  full.mpc.u_max = base.mpc.u_max;
  full.mpc.state_lower = base.mpc.state_lower;
  full.mpc.state_upper = base.mpc.state_upper;
  full.mpc.w_input = base.mpc.w_input;
  full.mpc.w_goal = base.mpc.w_goal;
  full.mpc.saturation_seconds = base.mpc.saturation_seconds;
  full.mpc.anchoring = base.mpc.anchoring;
  full.disturbance_variance = base.disturbance_variance;
  full.delta_obstacle = base.delta_obstacle;
  full.delta_goal = base.delta_goal;
  full.delta_formation = base.delta_formation;
  full.agent1_start = base.agent1_start;
  full.agent2_start = base.agent2_start;
  full.obstacle_center = base.obstacle_center;
  full.goal_center = base.goal_center;
  full.discretization = base.discretization;
  const ClosedLoopProblem p = make_two_agent_problem(full);
  const MpcConfig c = full.controller();
  json files = json::array();
  for (ControlMode m : {ControlMode::Nominal, ControlMode::Tightened}) {
    const MilpModel model = mpc_window_model(p, c, m, {p.x0});
    const fs::path path = dir / ("window0_" + std::string(to_string(m)) + ".lp");
    write_file(path, export_lp(model));
    files.push_back({{"path", path.string()}, {"variables", model.num_variables()},
                     {"binaries", model.num_binaries()}, {"constraints", model.num_constraints()}});
  }
  return files;
}

json cmd_encode(const Options& o) {
  const json cfg = load(o.config);
  if (o.out.empty()) config_error("encode needs --out");
  if (!cfg.contains("formula") && o.formula_text.empty()) {
    // Experiment configs export the full-resolution window models.
    return {{"lp_files", export_experiment_lps(experiment(cfg), fs::path(o.out))}};
  }
  const Encoded e = encode(cfg, o);
  const fs::path path = fs::path(o.out) / "model.lp";
  write_file(path, export_lp(e.enc.model));
  return {{"formula", print(e.planned)},
          {"lp_file", path.string()},
          {"variables", e.enc.model.num_variables()},
          {"binaries", e.enc.model.num_binaries()},
          {"constraints", e.enc.model.num_constraints()}};
}

json cmd_solve(const Options& o) {
  const json cfg = load(o.config);
  const Encoded e = encode(cfg, o);
  const MilpSolution s = solve_milp(e.enc.model);
  json out{{"formula", print(e.planned)}, {"status", std::string(to_string(s.status))}, {"nodes", s.nodes},
           {"seconds", s.seconds}};
  if (s.has_incumbent) {
    out["objective"] = s.objective;
    out["states"] = vectors(extract_states(e.enc, s.x));
    out["inputs"] = vectors(extract_inputs(e.enc, s.x));
  }
  if (s.status == SolveStatus::Infeasible) {
    std::cout << out.dump(2) << '\n';
    throw Error(ErrorCategory::Infeasible, "the encoded problem has no feasible input sequence");
  }
  if (s.status == SolveStatus::Unbounded) throw Error(ErrorCategory::Numeric, "the encoded problem is unbounded");
  return out;
}

ControlMode mode_of(const std::string& m) {
  if (m == "nominal") return ControlMode::Nominal;
  if (m == "tightened") return ControlMode::Tightened;
  config_error("mode must be nominal or tightened");
}

json cmd_simulate(const Options& o) {
  const json cfg = load(o.config);
  ExperimentConfig ec = experiment(cfg);
  if (o.seed >= 0) ec.seed = static_cast<std::uint64_t>(o.seed);
  const ControlMode mode = mode_of(o.mode);
  const ClosedLoopProblem p = make_two_agent_problem(ec);
  const RunRecord run = simulate_closed_loop(p, ec.controller(), mode, ec.seed);
  if (!o.out.empty()) write_file(fs::path(o.out) / "run.csv", run_csv(run, ec.mpc.dt_sys));
  return {{"mode", std::string(to_string(mode))},
          {"seed", run.seed},
          {"safety_violated", run.safety_violated},
          {"goal_reached", run.goal_reached},
          {"infeasible_windows", run.infeasible_windows},
          {"safety_margin", run.safety_margin},
          {"nodes", run.nodes},
          {"seconds", run.seconds}};
}

json cmd_experiment(const Options& o) {
  const json cfg = load(o.config);
  ExperimentConfig ec = experiment(cfg);
  if (o.seed >= 0) ec.seed = static_cast<std::uint64_t>(o.seed);
  log(o, "running " + std::to_string(ec.runs) + " runs per type");
  const auto [type1, type2] = run_experiment(ec);
  json out{{"runs_per_type", ec.runs}, {"seed", ec.seed}, {"type1", summary(type1)}, {"type2", summary(type2)}};
  if (!o.out.empty()) {
    const fs::path dir(o.out);
    for (const auto* r : {&type1, &type2}) {
      const std::string sub = r->mode == ControlMode::Nominal ? "type1" : "type2";
      for (const auto& run : r->runs) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03llu.csv", static_cast<unsigned long long>(run.seed - ec.seed));
        write_file(dir / sub / name, run_csv(run, ec.mpc.dt_sys));
      }
    }
    out["lp_files"] = export_experiment_lps(ec, dir / "lp");
    write_file(dir / "summary.json", out.dump(2) + "\n");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-aware STL tools: parse, risk, tighten, encode, solve, simulate, experiment"};
  app.require_subcommand(1, 1);
  Options o;
  app.add_flag("-v,--verbose", o.verbose, "Progress on stderr");

  auto with_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("-c,--config", o.config, "JSON config file");
    if (required) opt->required();
    sub->add_option("-o,--out", o.out, "Output directory");
    sub->add_option("-s,--seed", o.seed, "Seed override");
  };
  auto* parse_cmd = app.add_subcommand("parse", "Canonical formula text and horizon");
  with_config(parse_cmd, false);
  parse_cmd->add_option("-f,--formula", o.formula_text, "Formula text (overrides the config)");
  auto* risk_cmd = app.add_subcommand("risk", "STL risk of a sampled ensemble per measure");
  with_config(risk_cmd, true);
  auto* tighten_cmd = app.add_subcommand("tighten", "DR-VaR tightened formula and margin table");
  with_config(tighten_cmd, true);
  auto* encode_cmd = app.add_subcommand("encode", "Write the MILP encoding as an LP file");
  with_config(encode_cmd, true);
  auto* solve_cmd = app.add_subcommand("solve", "Solve the MILP encoding");
  with_config(solve_cmd, true);
  auto* sim_cmd = app.add_subcommand("simulate", "One closed-loop two-agent run");
  with_config(sim_cmd, true);
  sim_cmd->add_option("-m,--mode", o.mode, "nominal or tightened")->check(CLI::IsMember({"nominal", "tightened"}));
  auto* exp_cmd = app.add_subcommand("experiment", "Type 1 and Type 2 batches");
  with_config(exp_cmd, true);
  for (auto* sub : {risk_cmd, tighten_cmd, encode_cmd, solve_cmd}) {
    sub->add_option("-f,--formula", o.formula_text, "Formula text (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    json result;
    if (*parse_cmd) result = cmd_parse(o);
    else if (*risk_cmd) result = cmd_risk(o);
    else if (*tighten_cmd) result = cmd_tighten(o);
    else if (*encode_cmd) result = cmd_encode(o);
    else if (*solve_cmd) result = cmd_solve(o);
    else if (*sim_cmd) result = cmd_simulate(o);
    else result = cmd_experiment(o);
    std::cout << result.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << json{{"error", std::string(to_string(e.category()))}, {"message", e.what()}}.dump() << '\n';
    return exit_code(e.category());
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "numeric"}, {"message", e.what()}}.dump() << '\n';
    return 4;
  }
}
