#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace stlrisk {

/// Affine predicate function alpha(x) = a^T x + b. The atomic proposition is
/// {alpha(x) >= 0}.
///
/// A predicate may carry a margin schedule indexed by absolute time step; the
/// evaluated value is then a^T x + b - margin[t]. Risk tightening produces
/// such predicates; parsed predicates never carry one.
class AffinePredicate {
 public:
  AffinePredicate() = default;
  AffinePredicate(Eigen::VectorXd a, double b, std::string name = {});

  const Eigen::VectorXd& a() const { return a_; }
  double b() const { return b_; }
  const std::string& name() const { return name_; }

  bool has_margins() const { return margins_ != nullptr; }
  /// Margin at absolute step t (0 when no schedule is attached).
  double margin(int t) const;
  std::span<const double> margins() const;

  /// a^T x + b - margin(t). x may be longer than a (missing coefficients are
  /// zero); shorter x is a dimension error.
  double value(const Eigen::VectorXd& x, int t = 0) const;
  /// Untightened a^T x + b.
  double affine(const Eigen::VectorXd& x) const;

  AffinePredicate negated() const;
  AffinePredicate with_margins(std::vector<double> schedule) const;
  AffinePredicate renamed(std::string name) const;

  /// Coefficient vectors are compared up to trailing zeros.
  friend bool operator==(const AffinePredicate& lhs, const AffinePredicate& rhs);

 private:
  Eigen::VectorXd a_;
  double b_ = 0.0;
  std::string name_;
  std::shared_ptr<const std::vector<double>> margins_;
};

enum class NodeKind { True, False, Atom, NegAtom, Not, And, Or, Until, Release };

/// Immutable STL formula. Copies share structure.
///
/// Not is only produced by Formula::negation; every other operation in the
/// library expects negation normal form (see to_nnf).
class Formula {
 public:
  static Formula top();
  static Formula bottom();
  static Formula atom(AffinePredicate pred);
  static Formula neg_atom(AffinePredicate pred);
  static Formula negation(Formula f);
  static Formula conjunction(std::vector<Formula> children);
  static Formula disjunction(std::vector<Formula> children);
  static Formula until(int a, int b, Formula left, Formula right);
  static Formula release(int a, int b, Formula left, Formula right);
  /// F[a,b] f := top U[a,b] f
  static Formula eventually(int a, int b, Formula f);
  /// G[a,b] f := bot R[a,b] f
  static Formula always(int a, int b, Formula f);

  NodeKind kind() const;
  const AffinePredicate& predicate() const;
  const std::vector<Formula>& children() const;
  const Formula& left() const;
  const Formula& right() const;
  int lo() const;
  int hi() const;

  bool is_nnf() const;
  /// Node identity, used for memoization keyed on shared subformulas.
  const void* id() const { return node_.get(); }

  friend bool operator==(const Formula& lhs, const Formula& rhs);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Named predicates that formula text may reference by identifier.
using PredicateEnv = std::map<std::string, AffinePredicate, std::less<>>;

struct ParseOptions {
  const PredicateEnv* env = nullptr;
  /// When positive, interval bounds are read as seconds and mapped to steps
  /// with a rounded down and b rounded up.
  double period = 0.0;
};

/// Parses formula text and returns it in negation normal form.
Formula parse(std::string_view text, const ParseOptions& options = {});

/// Canonical text; parse(print(f)) == f for any formula without margins.
std::string print(const Formula& f);
std::string print(const AffinePredicate& p);

Formula to_nnf(const Formula& f);

/// len(phi): atoms 0, and/or max of children, until/release b + max.
int horizon(const Formula& f);

/// Removes top/bot operands from and/or and collapses single-operand nodes.
Formula simplify_constants(const Formula& f);

/// Maps a second-valued interval onto steps (a down, b up).
std::pair<int, int> seconds_to_steps(double a, double b, double period);

}  // namespace stlrisk
