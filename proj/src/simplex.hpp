#pragma once

// Dense bounded-variable simplex used by solve_lp and the branch and bound.
// Internal header.

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "stlrisk/milp.hpp"

namespace stlrisk::detail {

/// min c^T x  s.t.  A x - s = 0,  lo <= (x, s) <= hi
struct LpData {
  Eigen::MatrixXd A;          // rows x cols
  std::vector<double> cost;   // cols
  std::vector<double> lo, hi;  // cols + rows (structural, then row activities)
};

LpData lp_data(const MilpModel& model);

class BoundedSimplex {
 public:
  BoundedSimplex(const LpData& data, const LpOptions& options);

  /// Two phases from the slack basis.
  SolveStatus solve();
  /// Restores primal feasibility after bound changes from a dual feasible
  /// basis (warm start).
  SolveStatus reoptimize();

  void set_bounds(int j, double lo, double hi);
  double lower(int j) const { return lo_[static_cast<std::size_t>(j)]; }
  double upper(int j) const { return hi_[static_cast<std::size_t>(j)]; }

  double objective() const;
  /// Structural values.
  std::vector<double> primal() const;
  std::vector<double> duals() const;
  std::vector<double> reduced_costs() const;
  int iterations() const { return iterations_; }

 private:
  enum class State : unsigned char { Basic, AtLower, AtUpper, Free };
  using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  void pivot(int r, int q, State leaving, double leaving_value);
  void refactor();
  void recompute_basics();
  void price(const std::vector<double>& c);
  SolveStatus primal_loop(const std::vector<double>& c);
  SolveStatus dual_loop();
  void place_nonbasic(int j);
  double infeasibility(int i) const;

  int rows_ = 0, structural_ = 0, cols_ = 0;
  std::shared_ptr<const Eigen::MatrixXd> K_;  // original columns [A | -I | artificials]
  Tableau T_;
  std::vector<double> cost_;  // phase 2 cost over all columns
  std::vector<double> c_;     // cost currently priced
  std::vector<double> lo_, hi_, x_, d_;
  std::vector<int> head_;
  std::vector<State> state_;
  int artificial_begin_ = 0;
  int iterations_ = 0;
  int since_refactor_ = 0;
  LpOptions opt_;
};

}  // namespace stlrisk::detail
