#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stlrisk/formula.hpp"
#include "stlrisk/risk_measures.hpp"
#include "stlrisk/semantics.hpp"

namespace stlrisk {

/// M sampled runs of the same stochastic process. Sample m of X_i is
/// trajectory m at step i.
class Ensemble {
 public:
  explicit Ensemble(std::vector<Run> runs);

  int size() const { return static_cast<int>(runs_.size()); }
  int start() const { return runs_.front().start; }
  int last_step() const { return runs_.front().last_step(); }
  int dimension() const { return static_cast<int>(runs_.front().states.front().size()); }
  const std::vector<Run>& runs() const { return runs_; }

  /// {scale * pred.value(X_t^(m))}_m
  std::vector<double> predicate_sample(const AffinePredicate& pred, int t, double scale) const;

 private:
  std::vector<Run> runs_;
};

/// Risk of violating f from step t (Definition of the recursive STL risk):
/// atoms rho(-alpha(X_t)), negated atoms rho(alpha(X_t)), and max, or min,
/// until min-max over the interval, release its dual, top -inf, bot +inf.
double stl_risk(const Ensemble& ens, int t, const Formula& f, const RiskSpec& spec);

/// Risk bound per predicate name with a default for unnamed or unlisted ones.
struct RiskBounds {
  double default_delta = 0.1;
  std::map<std::string, double, std::less<>> by_name;

  double operator()(const AffinePredicate& pred) const;
};

enum class Sign { Minus, Plus };

inline double sign_factor(Sign s) { return s == Sign::Minus ? -1.0 : 1.0; }

/// rho(sign * alpha(X_time)) <= bound
struct RiskLeaf {
  AffinePredicate predicate;
  Sign sign = Sign::Minus;
  int time = 0;
  double bound = 0.0;

  friend bool operator==(const RiskLeaf&, const RiskLeaf&) = default;
};

enum class RiskNodeKind { AlwaysTrue, AlwaysFalse, Leaf, And, Or };

/// Boolean combination of atomic risk constraints.
struct AtomicRiskTree {
  RiskNodeKind kind = RiskNodeKind::AlwaysTrue;
  RiskLeaf leaf;
  std::vector<AtomicRiskTree> children;

  static AtomicRiskTree always_true() { return {}; }
  static AtomicRiskTree always_false();
  static AtomicRiskTree make_leaf(RiskLeaf leaf);
  /// Drops neutral constants, short-circuits absorbing ones and collapses
  /// single-child nodes.
  static AtomicRiskTree make_and(std::vector<AtomicRiskTree> children);
  static AtomicRiskTree make_or(std::vector<AtomicRiskTree> children);

  int leaf_count() const;
  friend bool operator==(const AtomicRiskTree&, const AtomicRiskTree&) = default;
};

/// Expands R((Xi, t) !|= f) <= delta into atomic risk constraints. f must be
/// in negation normal form.
AtomicRiskTree decompose(const Formula& f, int t, const RiskBounds& bounds);

using LeafOracle = std::function<bool(const RiskLeaf&)>;

bool evaluate(const AtomicRiskTree& tree, const LeafOracle& leaf_holds);
/// Leaves checked with eval_risk on the ensemble.
bool evaluate(const AtomicRiskTree& tree, const Ensemble& ens, const RiskSpec& spec);

std::string print(const AtomicRiskTree& tree);

}  // namespace stlrisk
