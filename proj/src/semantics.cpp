#include "stlrisk/semantics.hpp"

#include <algorithm>
#include <limits>

#include "stlrisk/error.hpp"

namespace stlrisk {

const Eigen::VectorXd& Run::at(int t) const {
  if (t < start || t > last_step()) {
    throw Error(ErrorCategory::Horizon, "run has no state at step " + std::to_string(t));
  }
  return states[static_cast<std::size_t>(t - start)];
}

namespace {

int max_predicate_dim(const Formula& f) {
  if (f.kind() == NodeKind::Atom || f.kind() == NodeKind::NegAtom) {
    return static_cast<int>(f.predicate().a().size());
  }
  int d = 0;
  for (const auto& c : f.children()) d = std::max(d, max_predicate_dim(c));
  return d;
}

bool sat(const Run& run, int t, const Formula& f) {
  switch (f.kind()) {
    case NodeKind::True: return true;
    case NodeKind::False: return false;
    case NodeKind::Atom: return f.predicate().value(run.at(t), t) >= 0.0;
    case NodeKind::NegAtom: return f.predicate().value(run.at(t), t) < 0.0;
    case NodeKind::And:
      return std::all_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return sat(run, t, c); });
    case NodeKind::Or:
      return std::any_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return sat(run, t, c); });
    case NodeKind::Until: {
      // exists i in [a,b]: right at t+i and left on [t, t+i]
      bool left_so_far = true;
      for (int i = 0; i <= f.hi() && left_so_far; ++i) {
        left_so_far = sat(run, t + i, f.left());
        if (i >= f.lo() && left_so_far && sat(run, t + i, f.right())) return true;
      }
      return false;
    }
    case NodeKind::Release: {
      // for all i in [a,b]: right at t+i or left somewhere on [t, t+i]
      bool left_seen = false;
      for (int i = 0; i <= f.hi(); ++i) {
        left_seen = left_seen || sat(run, t + i, f.left());
        if (left_seen) return true;
        if (i >= f.lo() && !sat(run, t + i, f.right())) return false;
      }
      return true;
    }
    case NodeKind::Not: break;
  }
  throw Error(ErrorCategory::Domain, "semantics require negation normal form");
}

double rob(const Run& run, int t, const Formula& f) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (f.kind()) {
    case NodeKind::True: return inf;
    case NodeKind::False: return -inf;
    case NodeKind::Atom: return f.predicate().value(run.at(t), t);
    case NodeKind::NegAtom: return -f.predicate().value(run.at(t), t);
    case NodeKind::And: {
      double r = inf;
      for (const auto& c : f.children()) r = std::min(r, rob(run, t, c));
      return r;
    }
    case NodeKind::Or: {
      double r = -inf;
      for (const auto& c : f.children()) r = std::max(r, rob(run, t, c));
      return r;
    }
    case NodeKind::Until: {
      double best = -inf;
      double left_min = inf;
      for (int i = 0; i <= f.hi(); ++i) {
        left_min = std::min(left_min, rob(run, t + i, f.left()));
        if (i >= f.lo()) best = std::max(best, std::min(left_min, rob(run, t + i, f.right())));
      }
      return best;
    }
    case NodeKind::Release: {
      double worst = inf;
      double left_max = -inf;
      for (int i = 0; i <= f.hi(); ++i) {
        left_max = std::max(left_max, rob(run, t + i, f.left()));
        if (i >= f.lo()) worst = std::min(worst, std::max(left_max, rob(run, t + i, f.right())));
      }
      return worst;
    }
    case NodeKind::Not: break;
  }
  throw Error(ErrorCategory::Domain, "semantics require negation normal form");
}

}  // namespace

void check_run(const Run& run, int t, const Formula& f) {
  if (run.states.empty()) throw Error(ErrorCategory::Horizon, "empty run");
  const Eigen::Index n = run.states.front().size();
  for (const auto& x : run.states) {
    if (x.size() != n) throw Error(ErrorCategory::Dimension, "run states differ in dimension");
  }
  if (max_predicate_dim(f) > n) {
    throw Error(ErrorCategory::Dimension, "formula predicates exceed the state dimension " +
                                              std::to_string(n));
  }
  const int h = horizon(f);
  if (t < run.start || t + h > run.last_step()) {
    throw Error(ErrorCategory::Horizon, "run covers steps [" + std::to_string(run.start) + "," +
                                            std::to_string(run.last_step()) + "] but the formula needs [" +
                                            std::to_string(t) + "," + std::to_string(t + h) + "]");
  }
  if (!f.is_nnf()) throw Error(ErrorCategory::Domain, "semantics require negation normal form");
}

bool satisfies(const Run& run, int t, const Formula& f) {
  check_run(run, t, f);
  return sat(run, t, f);
}

double robustness(const Run& run, int t, const Formula& f) {
  check_run(run, t, f);
  return rob(run, t, f);
}

}  // namespace stlrisk
