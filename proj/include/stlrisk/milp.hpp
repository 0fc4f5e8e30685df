#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace stlrisk {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  bool binary = false;

  friend bool operator==(const Variable&, const Variable&) = default;
};

struct LinearTerm {
  int var = 0;
  double coef = 0.0;

  friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
};

struct Constraint {
  std::string name;
  std::vector<LinearTerm> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// Minimization MILP: linear objective, linear rows, boxed variables, some
/// of them binary.
class MilpModel {
 public:
  int add_variable(std::string name, double lower, double upper);
  int add_binary(std::string name);
  int add_constraint(std::string name, std::vector<LinearTerm> terms, Relation relation,
                     double rhs);

  void set_objective(int var, double coef);
  void add_objective(int var, double coef);
  void set_objective_constant(double c) { objective_constant_ = c; }

  void set_bounds(int var, double lower, double upper);

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  int num_binaries() const;

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<double>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  double objective_value(const std::vector<double>& x) const;
  /// Largest bound or row violation of x.
  double max_violation(const std::vector<double>& x) const;

  /// Throws when a row references an undeclared variable, a bound pair is
  /// inverted or a binary is not boxed in [0,1].
  void validate() const;

  friend bool operator==(const MilpModel&, const MilpModel&) = default;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  std::vector<double> objective_;
  double objective_constant_ = 0.0;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string_view to_string(SolveStatus status);

struct LpOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  int max_iterations = 50000;
};

struct LpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  /// Row duals y with c - A^T y = reduced costs (minimization).
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  int iterations = 0;
};

/// LP relaxation (binaries relaxed to [0,1]) solved by a two-phase dense
/// bounded simplex.
LpSolution solve_lp(const MilpModel& model, const LpOptions& options = {});

struct MilpLimits {
  long max_nodes = 200000;
  double max_seconds = 60.0;
  double integrality_tol = 1e-6;
  /// Absolute optimality gap used for pruning.
  double gap_tol = 1e-9;
  LpOptions lp;
};

struct MilpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = kInfinity;
  std::vector<double> x;
  bool has_incumbent = false;
  long nodes = 0;
  double seconds = 0.0;
};

/// Depth-first branch and bound: both children are solved, the better one is
/// explored first, branching on the most fractional binary.
MilpSolution solve_milp(const MilpModel& model, const MilpLimits& limits = {});

/// CPLEX LP text with variables and rows in declaration order.
std::string export_lp(const MilpModel& model);
/// Reads the subset of CPLEX LP written by export_lp.
MilpModel read_lp(std::string_view text);

}  // namespace stlrisk
