#pragma once

#include <vector>

#include <Eigen/Dense>

#include "stlrisk/formula.hpp"

namespace stlrisk {

/// Finite deterministic run x_start, x_start+1, ..., x_start+N.
struct Run {
  std::vector<Eigen::VectorXd> states;
  int start = 0;

  int length() const { return static_cast<int>(states.size()) - 1; }
  int last_step() const { return start + length(); }
  const Eigen::VectorXd& at(int t) const;
};

/// Checks that the run covers [t, t + horizon(f)] and that every state has
/// the same dimension, no smaller than the predicates in f.
void check_run(const Run& run, int t, const Formula& f);

/// Boolean satisfaction (run, t) |= f. f must be in negation normal form.
bool satisfies(const Run& run, int t, const Formula& f);

/// Quantitative robustness. Positive values imply satisfaction, negative
/// values violation. top is +inf and bot is -inf.
double robustness(const Run& run, int t, const Formula& f);

}  // namespace stlrisk
