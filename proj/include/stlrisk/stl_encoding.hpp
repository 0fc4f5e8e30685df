#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stlrisk/formula.hpp"
#include "stlrisk/milp.hpp"
#include "stlrisk/tightening.hpp"

namespace stlrisk {

/// constant + sum coef * x[var]
struct LinearExpr {
  double constant = 0.0;
  std::vector<LinearTerm> terms;

  double eval(const std::vector<double>& x) const;
};

struct EncodeOptions {
  /// Big-M for indicator rows when no state box bounds the atom.
  double big_m = 1e3;
  double strict_eps = 1e-6;
  /// Atoms on known prefix states within this distance of their boundary
  /// count as satisfied, so a realized past that tracked a plan up to solver
  /// tolerance does not make the window infeasible.
  double known_tol = 1e-6;
  /// Polarity-aware encoding: enforced subformulas become hard rows,
  /// indicators only imply their subformula, and atoms decided by the
  /// reachable state boxes fold to constants. Without it every
  /// (subformula, step) gets a two-sided indicator.
  bool simplify = false;
  /// Substitute the dynamics into the rows instead of keeping state
  /// variables linked by equality rows.
  bool condense = false;
  /// Inputs as u = p - q with p, q >= 0 (so |u| = p + q under a positive
  /// cost).
  bool split_inputs = false;
  /// Declared state box, one entry per step 0..horizon or a single entry for
  /// all steps. Enforced on the free steps and used for big-M and folding.
  std::vector<Eigen::VectorXd> state_lower, state_upper;
  /// Input box applied to every free input.
  Eigen::VectorXd input_lower, input_upper;
};

struct StlEncoding {
  MilpModel model;
  /// states[s][i] is x_bar_s component i as an affine expression, s = 0..horizon.
  std::vector<std::vector<LinearExpr>> states;
  /// input_vars[s][j] for the free steps (empty before first_free_step);
  /// with split inputs this is the positive part and input_neg_vars the
  /// negative part.
  std::vector<std::vector<int>> input_vars, input_neg_vars;
  int first_free_step = 0;
  /// Binary indicator of the root, or -1 when it was enforced structurally.
  int root = -1;
  /// Per-step interval hull of feasible states used for big-M and folding
  /// (empty when no input box was given).
  std::vector<Eigen::VectorXd> box_lower, box_upper;
};

/// Encodes (x_bar, 0) |= f over the mean dynamics as MILP constraints.
///
/// `prefix` holds the known states x_bar_0..x_bar_k (at least one); steps up
/// to k are fixed, later steps follow x_bar_{s+1} = A_s x_bar_s + B_s u_s +
/// W_bar_s with the system indexed by absolute step. The objective is left
/// empty for the caller.
StlEncoding encode_deterministic_stl(const Formula& f, const LtvSystem& sys,
                                     const std::vector<Eigen::VectorXd>& prefix, int horizon,
                                     const EncodeOptions& options = {});

/// Per-step interval hull of the states reachable from prefix.back() with
/// inputs in [input_lower, input_upper], each step intersected with the
/// declared box (when given) before propagating. Steps of the prefix are
/// the known points.
void reachable_boxes(const LtvSystem& sys, const std::vector<Eigen::VectorXd>& prefix, int horizon,
                     const Eigen::VectorXd& input_lower, const Eigen::VectorXd& input_upper,
                     const std::vector<Eigen::VectorXd>& lower,
                     const std::vector<Eigen::VectorXd>& upper,
                     std::vector<Eigen::VectorXd>& box_lower,
                     std::vector<Eigen::VectorXd>& box_upper);

/// x_bar_0..x_bar_horizon from a solution vector.
std::vector<Eigen::VectorXd> extract_states(const StlEncoding& enc, const std::vector<double>& x);
/// Inputs of the free steps first_free_step..horizon-1.
std::vector<Eigen::VectorXd> extract_inputs(const StlEncoding& enc, const std::vector<double>& x);

}  // namespace stlrisk
