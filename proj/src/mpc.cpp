#include "stlrisk/mpc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "stlrisk/error.hpp"
#include "stlrisk/semantics.hpp"
#include "stlrisk/stl_encoding.hpp"

namespace stlrisk {

std::string_view to_string(ControlMode mode) {
  return mode == ControlMode::Nominal ? "nominal" : "tightened";
}

int MpcConfig::steps_per_control() const {
  if (!(dt_sys > 0.0) || !(dt_ctrl > 0.0)) {
    throw Error(ErrorCategory::Config, "time steps must be positive");
  }
  const double ratio = dt_ctrl / dt_sys;
  const long r = std::lround(ratio);
  if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9 * std::max(1.0, ratio)) {
    throw Error(ErrorCategory::Config, "controller step must be an integer multiple of the system step");
  }
  return static_cast<int>(r);
}

void MpcConfig::validate(int state_dim, int input_dim) const {
  steps_per_control();
  if (horizon < 1) throw Error(ErrorCategory::Config, "prediction horizon must be positive");
  if (run_steps < 1) throw Error(ErrorCategory::Config, "run length must be positive");
  if (!(w_input >= 0.0) || !(w_goal >= 0.0)) {
    throw Error(ErrorCategory::Config, "cost weights must be nonnegative");
  }
  if (u_max.size() != input_dim) {
    throw Error(ErrorCategory::Config, "input bound needs one entry per input");
  }
  if (!(u_max.array() >= 0.0).all()) throw Error(ErrorCategory::Config, "input box is empty");
  if (goal_target.size() != static_cast<Eigen::Index>(goal_coords.size())) {
    throw Error(ErrorCategory::Config, "goal target needs one entry per goal coordinate");
  }
  for (int c : goal_coords) {
    if (c < 0 || c >= state_dim) throw Error(ErrorCategory::Config, "goal coordinate out of range");
  }
  for (const auto* box : {&state_lower, &state_upper}) {
    if (box->size() != 0 && box->size() != state_dim) {
      throw Error(ErrorCategory::Config, "state box needs one entry per state");
    }
  }
  if (state_lower.size() && state_upper.size() && (state_lower.array() > state_upper.array()).any()) {
    throw Error(ErrorCategory::Config, "state box is empty");
  }
  if (!(saturation_seconds >= 0.0)) throw Error(ErrorCategory::Config, "saturation time must be nonnegative");
}

namespace {

struct ControllerParts {
  Eigen::MatrixXd A, B, cov;
};

ControllerParts compose(const ClosedLoopProblem& p, int r) {
  const auto n = p.A.rows();
  ControllerParts out{Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, p.B.cols()),
                      Eigen::MatrixXd::Zero(n, n)};
  for (int i = 0; i < r; ++i) {
    // out.A = A^i at the start of iteration i
    out.B += out.A * p.B;
    out.cov += out.A * p.w_cov * out.A.transpose();
    out.A = p.A * out.A;
  }
  return out;
}

void check_problem(const ClosedLoopProblem& p) {
  const auto n = p.A.rows();
  if (p.A.cols() != n || p.B.rows() != n || p.w_cov.rows() != n || p.w_cov.cols() != n ||
      p.x0.size() != n) {
    throw Error(ErrorCategory::Dimension, "closed-loop problem dimensions disagree");
  }
}

struct Window {
  StlEncoding enc;
  Formula planned;
};

Window build_window(const ClosedLoopProblem& problem, const MpcConfig& cfg, ControlMode mode,
                    const std::vector<Eigen::VectorXd>& history) {
  check_problem(problem);
  cfg.validate(static_cast<int>(problem.A.rows()), static_cast<int>(problem.B.cols()));
  if (history.empty()) throw Error(ErrorCategory::Domain, "need the observed state");
  const int len = horizon(problem.formula);
  if (cfg.horizon < len) {
    throw Error(ErrorCategory::Config, "prediction horizon " + std::to_string(cfg.horizon) +
                                           " is shorter than the formula horizon " +
                                           std::to_string(len));
  }
  const int r = cfg.steps_per_control();
  const ControllerParts parts = compose(problem, r);
  const auto n = problem.A.rows();
  const bool global = cfg.anchoring == TimeAnchoring::Global;
  const int k = global ? static_cast<int>(history.size()) - 1 : 0;
  const int H = global ? std::max(cfg.horizon, k + 1) : cfg.horizon;
  std::vector<Eigen::VectorXd> prefix =
      global ? history : std::vector<Eigen::VectorXd>{history.back()};

  // Disturbances before the observed step are already realized.
  std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(H), parts.cov);
  for (int s = 0; s < k; ++s) covs[static_cast<std::size_t>(s)] = Eigen::MatrixXd::Zero(n, n);
  const LtvSystem sys({parts.A}, {parts.B}, {Eigen::VectorXd::Zero(n)}, std::move(covs), H);

  Window w{{}, problem.formula};
  if (mode == ControlMode::Tightened) {
    TightenOptions topt;
    topt.saturation = k + static_cast<int>(std::lround(cfg.saturation_seconds / cfg.dt_ctrl));
    w.planned = tighten_formula(problem.formula, sys, cfg.deltas, 0, topt);
  }

  EncodeOptions eo;
  eo.simplify = true;
  eo.condense = true;
  eo.split_inputs = true;
  eo.input_lower = -cfg.u_max;
  eo.input_upper = cfg.u_max;
  if (cfg.state_lower.size()) eo.state_lower = {cfg.state_lower};
  if (cfg.state_upper.size()) eo.state_upper = {cfg.state_upper};
  w.enc = encode_deterministic_stl(w.planned, sys, prefix, H, eo);

  auto& model = w.enc.model;
  for (int s = k; s < H; ++s) {
    const auto& pos = w.enc.input_vars[static_cast<std::size_t>(s)];
    const auto& neg = w.enc.input_neg_vars[static_cast<std::size_t>(s)];
    for (std::size_t j = 0; j < pos.size(); ++j) {
      model.add_objective(pos[j], cfg.w_input);
      model.add_objective(neg[j], cfg.w_input);
    }
  }
  if (cfg.w_goal > 0.0) {
    for (int s = k + 1; s <= H; ++s) {
      for (std::size_t c = 0; c < cfg.goal_coords.size(); ++c) {
        const auto& x = w.enc.states[static_cast<std::size_t>(s)][static_cast<std::size_t>(cfg.goal_coords[c])];
        const double ref = cfg.goal_target[static_cast<Eigen::Index>(c)];
        const std::string tag = std::to_string(s) + "_" + std::to_string(c);
        const int e = model.add_variable("dist_" + tag, 0.0, kInfinity);
        std::vector<LinearTerm> above{{e, 1.0}}, below{{e, 1.0}};
        for (const auto& t : x.terms) {
          above.push_back({t.var, -t.coef});
          below.push_back({t.var, t.coef});
        }
        model.add_constraint("dist_hi_" + tag, std::move(above), Relation::GreaterEqual, x.constant - ref);
        model.add_constraint("dist_lo_" + tag, std::move(below), Relation::GreaterEqual, ref - x.constant);
        model.add_objective(e, cfg.w_goal);
      }
    }
  }
  return w;
}

void collect_margins(const Formula& f, int t, double& best) {
  switch (f.kind()) {
    case NodeKind::Atom:
    case NodeKind::NegAtom:
      best = std::max(best, f.predicate().margin(t));
      return;
    case NodeKind::And:
    case NodeKind::Or:
    case NodeKind::Not:
      for (const auto& c : f.children()) collect_margins(c, t, best);
      return;
    case NodeKind::Until:
    case NodeKind::Release:
      collect_margins(f.left(), t, best);
      collect_margins(f.right(), t, best);
      return;
    default: return;
  }
}

double largest_margin(const Formula& f, int t) {
  double best = 0.0;
  collect_margins(f, t, best);
  return best;
}

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  out += buf;
}

}  // namespace

LtvSystem controller_model(const ClosedLoopProblem& problem, const MpcConfig& cfg, int horizon) {
  check_problem(problem);
  const ControllerParts parts = compose(problem, cfg.steps_per_control());
  return LtvSystem::time_invariant(parts.A, parts.B, Eigen::VectorXd::Zero(problem.A.rows()),
                                   parts.cov, horizon);
}

MilpModel mpc_window_model(const ClosedLoopProblem& problem, const MpcConfig& cfg,
                           ControlMode mode, const std::vector<Eigen::VectorXd>& history) {
  return build_window(problem, cfg, mode, history).enc.model;
}

MpcStepResult mpc_step(const ClosedLoopProblem& problem, const MpcConfig& cfg, ControlMode mode,
                       const std::vector<Eigen::VectorXd>& history) {
  Window w = build_window(problem, cfg, mode, history);
  MpcStepResult out;
  out.planned_formula = w.planned;
  out.u = Eigen::VectorXd::Zero(problem.B.cols());
  const MilpSolution sol = solve_milp(w.enc.model, cfg.limits);
  out.status = sol.status;
  out.nodes = sol.nodes;
  if (!sol.has_incumbent) return out;
  out.feasible = true;
  out.objective = sol.objective;
  out.planned_states = extract_states(w.enc, sol.x);
  out.planned_inputs = extract_inputs(w.enc, sol.x);
  out.u = out.planned_inputs.front();
  return out;
}

RunRecord simulate_closed_loop(const ClosedLoopProblem& problem, const MpcConfig& cfg,
                               ControlMode mode, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  check_problem(problem);
  const int r = cfg.steps_per_control();
  const auto n = problem.A.rows();
  const LtvSystem plant = LtvSystem::time_invariant(problem.A, problem.B, Eigen::VectorXd::Zero(n),
                                                    problem.w_cov, 1);
  const bool noiseless = plant.deterministic();
  std::mt19937_64 rng(seed);

  RunRecord rec;
  rec.seed = seed;
  Eigen::VectorXd x = problem.x0;
  rec.states.push_back(x);
  std::vector<Eigen::VectorXd> history;
  for (int k = 0; k < cfg.run_steps; ++k) {
    history.push_back(x);
    const MpcStepResult step = mpc_step(problem, cfg, mode, history);
    rec.nodes += step.nodes;
    if (!step.feasible) ++rec.infeasible_windows;
    const int t_next = cfg.anchoring == TimeAnchoring::Global ? k + 1 : 1;
    const double margin = largest_margin(step.planned_formula, t_next);
    for (int i = 0; i < r; ++i) {
      const Eigen::VectorXd w =
          noiseless ? Eigen::VectorXd::Zero(n) : sample_disturbance(plant, 0, problem.law, rng);
      x = problem.A * x + problem.B * step.u + w;
      rec.controls.push_back(step.u);
      rec.disturbances.push_back(w);
      rec.window_margin.push_back(margin);
      rec.states.push_back(x);
    }
  }

  Run sampled;
  for (std::size_t s = 0; s < rec.states.size(); s += static_cast<std::size_t>(r)) {
    sampled.states.push_back(rec.states[s]);
  }
  rec.safety_violated = !satisfies(sampled, 0, problem.safety);
  rec.safety_margin = robustness(sampled, 0, problem.safety);
  rec.goal_reached = satisfies(sampled, 0, problem.goal);
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

double SimResult::median_safety_margin() const {
  if (runs.empty()) return 0.0;
  std::vector<double> m;
  for (const auto& r : runs) m.push_back(r.safety_margin);
  std::sort(m.begin(), m.end());
  const std::size_t h = m.size() / 2;
  return m.size() % 2 ? m[h] : 0.5 * (m[h - 1] + m[h]);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> double_integrator(int agents, double dt,
                                                              Discretization method) {
  if (agents < 1 || !(dt > 0.0)) throw Error(ErrorCategory::Domain, "need agents and a positive step");
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4 * agents, 4 * agents);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4 * agents, 2 * agents);
  for (int g = 0; g < agents; ++g) {
    for (int d = 0; d < 2; ++d) {
      const int p = 4 * g + d, v = 4 * g + 2 + d, u = 2 * g + d;
      A(p, v) = dt;
      B(v, u) = dt;
      if (method == Discretization::ExactZoh) B(p, u) = 0.5 * dt * dt;
    }
  }
  return {A, B};
}

Eigen::VectorXd sample_disturbance(std::mt19937_64& rng, int agents, double variance) {
  std::student_t_distribution<double> t3(3.0);
  const double scale = std::sqrt(variance / 3.0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4 * agents);
  for (int g = 0; g < agents; ++g) {
    w[4 * g + 2] = scale * t3(rng);
    w[4 * g + 3] = scale * t3(rng);
  }
  return w;
}

ExperimentConfig ExperimentConfig::scaled() {
  ExperimentConfig c;
  auto& m = c.mpc;
  m.dt_sys = 0.1;
  m.dt_ctrl = 0.5;
  m.horizon = 6;
  m.run_steps = 6;
  m.w_input = 1.0;
  m.w_goal = 10.0;
  m.goal_coords = {0, 1};
  m.u_max = Eigen::VectorXd::Constant(4, 3.0);
  m.state_lower = Eigen::VectorXd(8);
  m.state_upper = Eigen::VectorXd(8);
  for (int g = 0; g < 2; ++g) {
    m.state_lower.segment(4 * g, 4) << -5.0, -5.0, -1.5, -1.5;
    m.state_upper.segment(4 * g, 4) << 5.0, 5.0, 1.5, 1.5;
  }
  m.saturation_seconds = 1.0;
  m.anchoring = TimeAnchoring::Global;
  m.limits.max_nodes = 20000;
  m.limits.max_seconds = 20.0;
  return c;
}

ExperimentConfig ExperimentConfig::full_resolution() {
  ExperimentConfig c = scaled();
  c.mpc.dt_ctrl = 0.2;
  c.mpc.horizon = 15;
  c.mpc.run_steps = 15;
  return c;
}

MpcConfig ExperimentConfig::controller() const {
  MpcConfig m = mpc;
  m.goal_target = goal_center;
  m.deltas.default_delta = delta_formation;
  m.deltas.by_name.clear();
  for (int i = 1; i <= 8; ++i) m.deltas.by_name["pi" + std::to_string(i)] = delta_obstacle;
  for (int i = 9; i <= 12; ++i) m.deltas.by_name["pi" + std::to_string(i)] = delta_goal;
  for (int i = 13; i <= 16; ++i) m.deltas.by_name["pi" + std::to_string(i)] = delta_formation;
  return m;
}

Formula two_agent_formula(const ExperimentConfig& cfg, double period) {
  const ClosedLoopProblem p = [&] {
    ExperimentConfig copy = cfg;
    copy.mpc.dt_ctrl = period;
    return make_two_agent_problem(copy);
  }();
  return p.formula;
}

namespace {

AffinePredicate pred(int idx, std::initializer_list<std::pair<int, double>> coefs, double b) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(8);
  for (const auto& [i, c] : coefs) a[i] = c;
  return AffinePredicate(a, b, "pi" + std::to_string(idx));
}

}  // namespace

ClosedLoopProblem make_two_agent_problem(const ExperimentConfig& cfg) {
  ClosedLoopProblem p;
  std::tie(p.A, p.B) = double_integrator(2, cfg.mpc.dt_sys, cfg.discretization);
  p.w_cov = Eigen::MatrixXd::Zero(8, 8);
  for (int i : {2, 3, 6, 7}) p.w_cov(i, i) = cfg.disturbance_variance;
  p.law = DisturbanceLaw::StudentT3;
  p.x0 = Eigen::VectorXd::Zero(8);
  p.x0.segment(0, 2) = cfg.agent1_start;
  p.x0.segment(4, 2) = cfg.agent2_start;

  const double ox = cfg.obstacle_center.x(), oy = cfg.obstacle_center.y();
  const double gx = cfg.goal_center.x(), gy = cfg.goal_center.y();
  // Agent g's x at 4g, y at 4g + 1.
  auto avoid = [&](int agent, int first) {
    const int x = 4 * agent, y = 4 * agent + 1;
    return Formula::disjunction({Formula::atom(pred(first, {{x, -1.0}}, ox - 0.5)),
                                 Formula::atom(pred(first + 1, {{x, 1.0}}, -ox - 0.5)),
                                 Formula::atom(pred(first + 2, {{y, -1.0}}, oy - 0.5)),
                                 Formula::atom(pred(first + 3, {{y, 1.0}}, -oy - 0.5))});
  };
  const Formula reach = Formula::conjunction({Formula::atom(pred(9, {{0, 1.0}}, 0.5 - gx)),
                                              Formula::atom(pred(10, {{0, -1.0}}, gx + 0.5)),
                                              Formula::atom(pred(11, {{1, 1.0}}, 0.5 - gy)),
                                              Formula::atom(pred(12, {{1, -1.0}}, 0.5 + gy))});
  const Formula formation =
      Formula::conjunction({Formula::atom(pred(13, {{0, -1.0}, {4, 1.0}}, 1.0)),
                            Formula::atom(pred(14, {{0, 1.0}, {4, -1.0}}, 1.0)),
                            Formula::atom(pred(15, {{1, -1.0}, {5, 1.0}}, 1.0)),
                            Formula::atom(pred(16, {{1, 1.0}, {5, -1.0}}, 1.0))});

  const double period = cfg.mpc.dt_ctrl;
  const auto [a0, a3] = seconds_to_steps(0.0, 3.0, period);
  const auto [r2, r3] = seconds_to_steps(2.0, 3.0, period);
  const auto [f1, f3] = seconds_to_steps(1.0, 3.0, period);
  const Formula safe = Formula::always(a0, a3, Formula::conjunction({avoid(0, 1), avoid(1, 5)}));
  const Formula goal = Formula::eventually(r2, r3, reach);
  p.formula = Formula::conjunction({safe, goal, Formula::always(f1, f3, formation)});
  p.safety = safe;
  p.goal = goal;
  return p;
}

SimResult run_batch(const ClosedLoopProblem& problem, const MpcConfig& cfg, ControlMode mode,
                    int runs, std::uint64_t seed, int threads) {
  const auto start = std::chrono::steady_clock::now();
  if (runs < 0) throw Error(ErrorCategory::Config, "run count must be nonnegative");
  SimResult out;
  out.mode = mode;
  out.runs.resize(static_cast<std::size_t>(runs));
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::max(1, std::min(workers, runs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < runs; i = next++) {
      try {
        out.runs[static_cast<std::size_t>(i)] =
            simulate_closed_loop(problem, cfg, mode, seed + static_cast<std::uint64_t>(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& r : out.runs) {
    out.safety_violations += r.safety_violated ? 1 : 0;
    out.goal_reached += r.goal_reached ? 1 : 0;
    out.runs_with_infeasibility += r.infeasible_windows > 0 ? 1 : 0;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::pair<SimResult, SimResult> run_experiment(const ExperimentConfig& cfg) {
  const ClosedLoopProblem problem = make_two_agent_problem(cfg);
  const MpcConfig mpc = cfg.controller();
  SimResult type1 = run_batch(problem, mpc, ControlMode::Nominal, cfg.runs, cfg.seed, cfg.threads);
  SimResult type2 = run_batch(problem, mpc, ControlMode::Tightened, cfg.runs, cfg.seed, cfg.threads);
  return {std::move(type1), std::move(type2)};
}

std::string run_csv(const RunRecord& run, double dt_sys) {
  std::string out = "t";
  const auto n = run.states.empty() ? 0 : run.states.front().size();
  const auto m = run.controls.empty() ? 0 : run.controls.front().size();
  for (Eigen::Index i = 0; i < n; ++i) out += ",x" + std::to_string(i);
  for (Eigen::Index j = 0; j < m; ++j) out += ",u" + std::to_string(j);
  for (Eigen::Index i = 0; i < n; ++i) out += ",w" + std::to_string(i);
  out += ",margin\n";
  for (std::size_t s = 0; s < run.states.size(); ++s) {
    append_number(out, static_cast<double>(s) * dt_sys);
    for (Eigen::Index i = 0; i < n; ++i) {
      out += ',';
      append_number(out, run.states[s][i]);
    }
    const bool has_step = s < run.controls.size();
    for (Eigen::Index j = 0; j < m; ++j) {
      out += ',';
      if (has_step) append_number(out, run.controls[s][j]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      out += ',';
      if (has_step) append_number(out, run.disturbances[s][i]);
    }
    out += ',';
    if (has_step) append_number(out, run.window_margin[s]);
    out += '\n';
  }
  return out;
}

}  // namespace stlrisk
