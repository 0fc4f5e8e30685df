#include "stlrisk/risk_semantics.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <unordered_map>

#include "stlrisk/error.hpp"

namespace stlrisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Ensemble::Ensemble(std::vector<Run> runs) : runs_(std::move(runs)) {
  if (runs_.empty()) throw Error(ErrorCategory::Domain, "ensemble needs at least one run");
  const Run& first = runs_.front();
  if (first.states.empty()) throw Error(ErrorCategory::Horizon, "ensemble run is empty");
  const Eigen::Index n = first.states.front().size();
  for (const auto& r : runs_) {
    if (r.start != first.start || r.states.size() != first.states.size()) {
      throw Error(ErrorCategory::Dimension, "ensemble runs differ in start or length");
    }
    for (const auto& x : r.states) {
      if (x.size() != n) throw Error(ErrorCategory::Dimension, "ensemble states differ in dimension");
    }
  }
}

std::vector<double> Ensemble::predicate_sample(const AffinePredicate& pred, int t,
                                               double scale) const {
  std::vector<double> out;
  out.reserve(runs_.size());
  for (const auto& r : runs_) out.push_back(scale * pred.value(r.at(t), t));
  return out;
}

namespace {

class RiskEvaluator {
 public:
  RiskEvaluator(const Ensemble& ens, const RiskSpec& spec) : ens_(ens), spec_(spec) {}

  double eval(int t, const Formula& f) {
    switch (f.kind()) {
      case NodeKind::True: return -kInf;
      case NodeKind::False: return kInf;
      case NodeKind::Atom:
      case NodeKind::NegAtom: return atom(t, f);
      case NodeKind::And: {
        double r = -kInf;
        for (const auto& c : f.children()) r = std::max(r, eval(t, c));
        return r;
      }
      case NodeKind::Or: {
        double r = kInf;
        for (const auto& c : f.children()) r = std::min(r, eval(t, c));
        return r;
      }
      case NodeKind::Until: {
        double best = kInf;
        double left_max = -kInf;
        for (int i = 0; i <= f.hi(); ++i) {
          left_max = std::max(left_max, eval(t + i, f.left()));
          if (i >= f.lo()) best = std::min(best, std::max(left_max, eval(t + i, f.right())));
        }
        return best;
      }
      case NodeKind::Release: {
        double worst = -kInf;
        double left_min = kInf;
        for (int i = 0; i <= f.hi(); ++i) {
          left_min = std::min(left_min, eval(t + i, f.left()));
          if (i >= f.lo()) worst = std::max(worst, std::min(left_min, eval(t + i, f.right())));
        }
        return worst;
      }
      case NodeKind::Not: break;
    }
    throw Error(ErrorCategory::Domain, "risk semantics require negation normal form");
  }

 private:
  struct Key {
    const void* id;
    int t;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<const void*>()(k.id) ^ (std::hash<int>()(k.t) * 0x9e3779b97f4a7c15ULL);
    }
  };

  double atom(int t, const Formula& f) {
    const Key key{f.id(), t};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const double scale = f.kind() == NodeKind::Atom ? -1.0 : 1.0;
    const double r = eval_risk(spec_, ens_.predicate_sample(f.predicate(), t, scale));
    memo_.emplace(key, r);
    return r;
  }

  const Ensemble& ens_;
  const RiskSpec& spec_;
  std::unordered_map<Key, double, KeyHash> memo_;
};

}  // namespace

double stl_risk(const Ensemble& ens, int t, const Formula& f, const RiskSpec& spec) {
  if (!spec.is_empirical()) {
    throw Error(ErrorCategory::Domain, "STL risk on an ensemble needs an empirical measure");
  }
  check_run(ens.runs().front(), t, f);
  RiskEvaluator ev(ens, spec);
  return ev.eval(t, f);
}

double RiskBounds::operator()(const AffinePredicate& pred) const {
  if (auto it = by_name.find(pred.name()); it != by_name.end()) return it->second;
  return default_delta;
}

AtomicRiskTree AtomicRiskTree::always_false() {
  AtomicRiskTree t;
  t.kind = RiskNodeKind::AlwaysFalse;
  return t;
}

AtomicRiskTree AtomicRiskTree::make_leaf(RiskLeaf leaf) {
  AtomicRiskTree t;
  t.kind = RiskNodeKind::Leaf;
  t.leaf = std::move(leaf);
  return t;
}

namespace {

AtomicRiskTree combine(std::vector<AtomicRiskTree> children, RiskNodeKind kind) {
  const RiskNodeKind neutral = kind == RiskNodeKind::And ? RiskNodeKind::AlwaysTrue
                                                         : RiskNodeKind::AlwaysFalse;
  const RiskNodeKind absorbing = kind == RiskNodeKind::And ? RiskNodeKind::AlwaysFalse
                                                           : RiskNodeKind::AlwaysTrue;
  std::vector<AtomicRiskTree> kept;
  kept.reserve(children.size());
  for (auto& c : children) {
    if (c.kind == absorbing) {
      AtomicRiskTree t;
      t.kind = absorbing;
      return t;
    }
    if (c.kind != neutral) kept.push_back(std::move(c));
  }
  if (kept.empty()) {
    AtomicRiskTree t;
    t.kind = neutral;
    return t;
  }
  if (kept.size() == 1) return std::move(kept.front());
  AtomicRiskTree t;
  t.kind = kind;
  t.children = std::move(kept);
  return t;
}

}  // namespace

AtomicRiskTree AtomicRiskTree::make_and(std::vector<AtomicRiskTree> children) {
  return combine(std::move(children), RiskNodeKind::And);
}

AtomicRiskTree AtomicRiskTree::make_or(std::vector<AtomicRiskTree> children) {
  return combine(std::move(children), RiskNodeKind::Or);
}

int AtomicRiskTree::leaf_count() const {
  if (kind == RiskNodeKind::Leaf) return 1;
  int n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

AtomicRiskTree decompose(const Formula& f, int t, const RiskBounds& bounds) {
  switch (f.kind()) {
    case NodeKind::True: return AtomicRiskTree::always_true();
    case NodeKind::False: return AtomicRiskTree::always_false();
    case NodeKind::Atom:
      return AtomicRiskTree::make_leaf({f.predicate(), Sign::Minus, t, bounds(f.predicate())});
    case NodeKind::NegAtom:
      return AtomicRiskTree::make_leaf({f.predicate(), Sign::Plus, t, bounds(f.predicate())});
    case NodeKind::And:
    case NodeKind::Or: {
      std::vector<AtomicRiskTree> cs;
      cs.reserve(f.children().size());
      for (const auto& c : f.children()) cs.push_back(decompose(c, t, bounds));
      return f.kind() == NodeKind::And ? AtomicRiskTree::make_and(std::move(cs))
                                       : AtomicRiskTree::make_or(std::move(cs));
    }
    case NodeKind::Until:
    case NodeKind::Release: {
      const bool until = f.kind() == NodeKind::Until;
      std::vector<AtomicRiskTree> anchors;
      for (int i = f.lo(); i <= f.hi(); ++i) {
        std::vector<AtomicRiskTree> lefts;
        for (int j = 0; j <= i; ++j) lefts.push_back(decompose(f.left(), t + j, bounds));
        AtomicRiskTree right = decompose(f.right(), t + i, bounds);
        if (until) {
          anchors.push_back(AtomicRiskTree::make_and(
              {std::move(right), AtomicRiskTree::make_and(std::move(lefts))}));
        } else {
          anchors.push_back(AtomicRiskTree::make_or(
              {std::move(right), AtomicRiskTree::make_or(std::move(lefts))}));
        }
      }
      return until ? AtomicRiskTree::make_or(std::move(anchors))
                   : AtomicRiskTree::make_and(std::move(anchors));
    }
    case NodeKind::Not: break;
  }
  throw Error(ErrorCategory::Domain, "decomposition requires negation normal form");
}

bool evaluate(const AtomicRiskTree& tree, const LeafOracle& leaf_holds) {
  switch (tree.kind) {
    case RiskNodeKind::AlwaysTrue: return true;
    case RiskNodeKind::AlwaysFalse: return false;
    case RiskNodeKind::Leaf: return leaf_holds(tree.leaf);
    case RiskNodeKind::And:
      return std::all_of(tree.children.begin(), tree.children.end(),
                         [&](const AtomicRiskTree& c) { return evaluate(c, leaf_holds); });
    case RiskNodeKind::Or:
      return std::any_of(tree.children.begin(), tree.children.end(),
                         [&](const AtomicRiskTree& c) { return evaluate(c, leaf_holds); });
  }
  return false;
}

bool evaluate(const AtomicRiskTree& tree, const Ensemble& ens, const RiskSpec& spec) {
  return evaluate(tree, [&](const RiskLeaf& leaf) {
    const auto sample = ens.predicate_sample(leaf.predicate, leaf.time, sign_factor(leaf.sign));
    return eval_risk(spec, sample) <= leaf.bound;
  });
}

namespace {

void print_tree(const AtomicRiskTree& tree, std::string& out) {
  switch (tree.kind) {
    case RiskNodeKind::AlwaysTrue: out += "true"; return;
    case RiskNodeKind::AlwaysFalse: out += "false"; return;
    case RiskNodeKind::Leaf: {
      const auto& l = tree.leaf;
      out += "rho(";
      out += l.sign == Sign::Minus ? '-' : '+';
      out += l.predicate.name().empty() ? print(l.predicate) : l.predicate.name();
      out += '@';
      out += std::to_string(l.time);
      out += ")<=";
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof(buf), l.bound);
      out.append(buf, res.ptr);
      return;
    }
    case RiskNodeKind::And:
    case RiskNodeKind::Or: {
      out += tree.kind == RiskNodeKind::And ? "and(" : "or(";
      for (std::size_t i = 0; i < tree.children.size(); ++i) {
        if (i) out += ", ";
        print_tree(tree.children[i], out);
      }
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string print(const AtomicRiskTree& tree) {
  std::string out;
  print_tree(tree, out);
  return out;
}

}  // namespace stlrisk
