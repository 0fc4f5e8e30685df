#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stlrisk/formula.hpp"
#include "stlrisk/milp.hpp"
#include "stlrisk/risk_semantics.hpp"
#include "stlrisk/tightening.hpp"

namespace stlrisk {

/// Nominal: plan against the untightened formula and ignore disturbances.
/// Tightened: plan against the DR-VaR tightened formula.
enum class ControlMode { Nominal, Tightened };

enum class Discretization { ForwardEuler, ExactZoh };

/// PerWindow re-anchors the formula at every controller step. Global keeps
/// mission time: the formula is evaluated from step 0 with the realized past
/// fixed, over a shrinking window.
enum class TimeAnchoring { PerWindow, Global };

std::string_view to_string(ControlMode mode);

struct MpcConfig {
  int horizon = 6;    // prediction horizon N in controller steps
  int run_steps = 6;  // controller steps per run
  double dt_sys = 0.1;
  double dt_ctrl = 0.5;
  double w_input = 1.0;
  double w_goal = 10.0;
  /// State coordinates tracked by the goal-distance cost and their target.
  std::vector<int> goal_coords;
  Eigen::VectorXd goal_target;
  /// Per-channel input bound |u_j| <= u_max[j].
  Eigen::VectorXd u_max;
  /// Declared state box (also used to derive big-M).
  Eigen::VectorXd state_lower, state_upper;
  RiskBounds deltas;
  double saturation_seconds = 1.0;
  TimeAnchoring anchoring = TimeAnchoring::PerWindow;
  MilpLimits limits;

  int steps_per_control() const;
  void validate(int state_dim, int input_dim) const;
};

/// Plant at the system rate plus the task checks applied to realized runs.
struct ClosedLoopProblem {
  Eigen::MatrixXd A, B;  // per system step
  Eigen::MatrixXd w_cov;  // disturbance covariance per system step
  DisturbanceLaw law = DisturbanceLaw::StudentT3;
  Eigen::VectorXd x0;
  /// Mission formula, intervals in controller steps.
  Formula formula = Formula::top();
  /// Checked from step 0 on the realized run sampled at the controller rate
  /// (intervals in controller steps). `safety` false flags a violation, its
  /// robustness is the run's safety margin.
  Formula safety = Formula::top();
  Formula goal = Formula::top();
};

/// Controller-rate model: plant composed over dt_ctrl / dt_sys steps with
/// the input held.
LtvSystem controller_model(const ClosedLoopProblem& problem, const MpcConfig& cfg, int horizon);

struct MpcStepResult {
  bool feasible = false;
  Eigen::VectorXd u;
  std::vector<Eigen::VectorXd> planned_states;
  std::vector<Eigen::VectorXd> planned_inputs;
  /// Formula the window was planned against (tightened in Tightened mode).
  Formula planned_formula = Formula::top();
  double objective = 0.0;
  long nodes = 0;
  SolveStatus status = SolveStatus::Infeasible;
};

/// One receding-horizon solve at controller step k. `history` holds the
/// observed controller-rate states x_0..x_k.
MpcStepResult mpc_step(const ClosedLoopProblem& problem, const MpcConfig& cfg, ControlMode mode,
                       const std::vector<Eigen::VectorXd>& history);

/// Builds the MILP solved by mpc_step (exposed for LP export).
MilpModel mpc_window_model(const ClosedLoopProblem& problem, const MpcConfig& cfg,
                           ControlMode mode, const std::vector<Eigen::VectorXd>& history);

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<Eigen::VectorXd> states;         // system rate, length steps+1
  std::vector<Eigen::VectorXd> controls;       // system rate, length steps
  std::vector<Eigen::VectorXd> disturbances;   // system rate, length steps
  std::vector<double> window_margin;           // per system step, largest margin in force
  bool safety_violated = false;
  bool goal_reached = false;
  int infeasible_windows = 0;
  double safety_margin = 0.0;
  double seconds = 0.0;
  long nodes = 0;
};

/// Closed loop: mpc_step every controller period, disturbed plant updates
/// every system step. An infeasible window applies zero input for that
/// period and is counted.
RunRecord simulate_closed_loop(const ClosedLoopProblem& problem, const MpcConfig& cfg,
                               ControlMode mode, std::uint64_t seed);

struct SimResult {
  ControlMode mode = ControlMode::Nominal;
  std::vector<RunRecord> runs;
  int safety_violations = 0;
  int goal_reached = 0;
  int runs_with_infeasibility = 0;
  double seconds = 0.0;

  double median_safety_margin() const;
};

/// Two double-integrator agents: per agent (px, py, vx, vy), inputs (ax, ay).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> double_integrator(int agents, double dt,
                                                              Discretization method);

/// Independent t(3) draws scaled to `variance`, on velocity states only.
Eigen::VectorXd sample_disturbance(std::mt19937_64& rng, int agents, double variance = 0.005);

struct ExperimentConfig {
  MpcConfig mpc;
  Discretization discretization = Discretization::ForwardEuler;
  Eigen::Vector2d agent1_start{-2.0, 0.0};
  Eigen::Vector2d agent2_start{-2.0, -1.0};
  Eigen::Vector2d obstacle_center{0.0, 0.0};
  Eigen::Vector2d goal_center{2.0, 0.0};
  double disturbance_variance = 0.005;
  double delta_obstacle = 0.1;
  double delta_goal = 0.5;
  double delta_formation = 0.5;
  int runs = 100;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency

  /// Defaults for the scaled experiment (dt_ctrl = 0.5 s).
  static ExperimentConfig scaled();
  /// Fine resolution (dt_ctrl = 0.2 s); intended for LP export.
  static ExperimentConfig full_resolution();

  /// `mpc` with the goal target and the per-predicate risk bounds filled in.
  MpcConfig controller() const;
};

/// Eq.-18 style reach-avoid task for two agents with predicates named
/// pi1..pi16 (obstacle pi1..pi8, goal pi9..pi12, formation pi13..pi16).
ClosedLoopProblem make_two_agent_problem(const ExperimentConfig& cfg);

/// The mission formula with intervals in seconds mapped to steps of `period`.
Formula two_agent_formula(const ExperimentConfig& cfg, double period);

SimResult run_batch(const ClosedLoopProblem& problem, const MpcConfig& cfg, ControlMode mode,
                    int runs, std::uint64_t seed, int threads);

/// Type 1 (nominal) and Type 2 (tightened) batches.
std::pair<SimResult, SimResult> run_experiment(const ExperimentConfig& cfg);

/// t, states, controls, disturbances and margin columns at the system rate.
std::string run_csv(const RunRecord& run, double dt_sys);

}  // namespace stlrisk
