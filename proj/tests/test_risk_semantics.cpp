#include <doctest.h>

#include <cmath>
#include <limits>

#include "stlrisk/error.hpp"
#include "stlrisk/risk_semantics.hpp"
#include "support.hpp"

using namespace stlrisk;
using stlrisk::testing::FormulaShape;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Ensemble random_ensemble(std::mt19937_64& rng, int members, int dim, int length) {
  std::vector<Run> runs;
  for (int m = 0; m < members; ++m) runs.push_back(testing::random_run(rng, dim, length));
  return Ensemble(std::move(runs));
}

AffinePredicate named(const char* name, Eigen::Vector3d a, double b) {
  return AffinePredicate(a, b, name);
}

AtomicRiskTree leaf(const AffinePredicate& p, Sign s, int t, double d) {
  return AtomicRiskTree::make_leaf({p, s, t, d});
}

}  // namespace

TEST_CASE("constants and Boolean connectives") {
  std::mt19937_64 rng(1);
  const Ensemble ens = random_ensemble(rng, 20, 2, 3);
  const auto spec = RiskSpec::cvar(0.2);
  CHECK(stl_risk(ens, 0, Formula::top(), spec) == -kInf);
  CHECK(stl_risk(ens, 0, Formula::bottom(), spec) == kInf);

  const Formula a = Formula::atom(AffinePredicate(Eigen::Vector2d(1, 0), 0.2));
  const Formula b = Formula::neg_atom(AffinePredicate(Eigen::Vector2d(1, -1), 0.0));
  const double ra = stl_risk(ens, 1, a, spec);
  const double rb = stl_risk(ens, 1, b, spec);
  CHECK(ra == eval_risk(spec, ens.predicate_sample(a.predicate(), 1, -1.0)));
  CHECK(rb == eval_risk(spec, ens.predicate_sample(b.predicate(), 1, 1.0)));
  CHECK(stl_risk(ens, 1, Formula::conjunction({a, b}), spec) == std::max(ra, rb));
  CHECK(stl_risk(ens, 1, Formula::disjunction({a, b}), spec) == std::min(ra, rb));
}

TEST_CASE("single-run ensembles give minus the robustness") {
  std::mt19937_64 rng(8);
  FormulaShape shape;
  shape.depth = 4;
  const std::vector<RiskSpec> specs{RiskSpec::expectation(), RiskSpec::worst_case(),
                                    RiskSpec::var(0.3), RiskSpec::cvar(0.3), RiskSpec::evar(0.3)};
  for (int i = 0; i < 300; ++i) {
    const Formula f = testing::random_formula(rng, shape);
    const Run run = testing::random_run(rng, 2, horizon(f) + testing::uniform_int(rng, 0, 2));
    const Ensemble ens({run});
    const double rob = robustness(run, 0, f);
    for (const auto& spec : specs) CHECK(stl_risk(ens, 0, f, spec) == -rob);
  }
}

TEST_CASE("worked example decomposes into anchored conjunctions") {
  const auto p1 = named("pi1", {1, 0, 0}, -0.5);
  const auto p2 = named("pi2", {0, 1, 0}, 0.0);
  const auto p3 = named("pi3", {0, 0, 1}, -1.0);
  const Formula f = Formula::until(
      3, 5, Formula::atom(p1),
      Formula::conjunction({Formula::atom(p2), Formula::neg_atom(p3)}));
  const double d = 0.2;
  const AtomicRiskTree tree = decompose(f, 0, RiskBounds{d, {}});

  std::vector<AtomicRiskTree> anchors;
  for (int tp = 3; tp <= 5; ++tp) {
    std::vector<AtomicRiskTree> lefts;
    for (int tpp = 0; tpp <= tp; ++tpp) lefts.push_back(leaf(p1, Sign::Minus, tpp, d));
    anchors.push_back(AtomicRiskTree::make_and(
        {AtomicRiskTree::make_and({leaf(p2, Sign::Minus, tp, d), leaf(p3, Sign::Plus, tp, d)}),
         AtomicRiskTree::make_and(std::move(lefts))}));
  }
  const AtomicRiskTree expected = AtomicRiskTree::make_or(std::move(anchors));
  CHECK(tree == expected);
  CHECK(tree.kind == RiskNodeKind::Or);
  CHECK(tree.children.size() == 3);
  CHECK(tree.leaf_count() == 2 * 3 + 4 + 5 + 6);
  CHECK(print(tree).rfind("or(and(and(rho(-pi2@3)<=0.2, rho(+pi3@3)<=0.2), and(rho(-pi1@0)<=0.2", 0) == 0);
}

TEST_CASE("decomposition of atoms, conjunctions and constants") {
  const auto p = named("p", {1, 0, 0}, 0.0);
  const auto q = named("q", {0, 1, 0}, 0.0);
  RiskBounds bounds{0.1, {{"q", 0.5}}};
  CHECK(decompose(Formula::atom(p), 2, bounds) == leaf(p, Sign::Minus, 2, 0.1));
  CHECK(decompose(Formula::conjunction({Formula::atom(p), Formula::atom(q)}), 0, bounds) ==
        AtomicRiskTree::make_and({leaf(p, Sign::Minus, 0, 0.1), leaf(q, Sign::Minus, 0, 0.5)}));
  CHECK(decompose(Formula::conjunction({Formula::top(), Formula::atom(p)}), 0, bounds) ==
        leaf(p, Sign::Minus, 0, 0.1));
  CHECK(decompose(Formula::disjunction({Formula::top(), Formula::atom(p)}), 0, bounds).kind ==
        RiskNodeKind::AlwaysTrue);
  // G[1,2] p: for each step, p there (the bot lefts vanish).
  CHECK(decompose(Formula::always(1, 2, Formula::atom(p)), 0, bounds) ==
        AtomicRiskTree::make_and({leaf(p, Sign::Minus, 1, 0.1), leaf(p, Sign::Minus, 2, 0.1)}));
  CHECK_THROWS_AS(decompose(Formula::negation(Formula::atom(p)), 0, bounds), Error);
}

TEST_CASE("tree evaluation agrees with the thresholded risk") {
  std::mt19937_64 rng(12);
  FormulaShape shape;
  shape.depth = 3;
  shape.max_interval = 4;
  int satisfied = 0;
  for (int i = 0; i < 200; ++i) {
    const Formula f = testing::random_formula(rng, shape);
    const Ensemble ens = random_ensemble(rng, 50, 2, horizon(f));
    const double d = testing::uniform(rng, 0.05, 0.95);
    const double threshold = testing::uniform(rng, -1.0, 1.0);
    for (const auto& spec : {RiskSpec::expectation(), RiskSpec::cvar(d), RiskSpec::var(d),
                             RiskSpec::evar(d), RiskSpec::worst_case(), RiskSpec::mean_variance(0.5)}) {
      const bool direct = stl_risk(ens, 0, f, spec) <= threshold;
      CHECK(evaluate(decompose(f, 0, RiskBounds{threshold, {}}), ens, spec) == direct);
      satisfied += direct;
    }
  }
  CHECK(satisfied > 50);
}

TEST_CASE("worst case dominates CVaR and duplicates leave the risk unchanged") {
  std::mt19937_64 rng(13);
  FormulaShape shape;
  for (int i = 0; i < 100; ++i) {
    const Formula f = testing::random_formula(rng, shape);
    std::vector<Run> runs;
    for (int m = 0; m < 10; ++m) runs.push_back(testing::random_run(rng, 2, horizon(f)));
    const Ensemble ens(runs);
    CHECK(stl_risk(ens, 0, f, RiskSpec::cvar(0.3)) <= stl_risk(ens, 0, f, RiskSpec::worst_case()));
    std::vector<Run> doubled = runs;
    doubled.insert(doubled.end(), runs.begin(), runs.end());
    const double once = stl_risk(ens, 0, f, RiskSpec::cvar(0.3));
    const double twice = stl_risk(Ensemble(doubled), 0, f, RiskSpec::cvar(0.3));
    CHECK((twice == once || std::abs(twice - once) <= 1e-12 * std::max(1.0, std::abs(once))));
    CHECK(stl_risk(Ensemble(doubled), 0, f, RiskSpec::var(0.3)) ==
          stl_risk(ens, 0, f, RiskSpec::var(0.3)));
  }
}

TEST_CASE("ensemble validation") {
  CHECK_THROWS_AS(Ensemble({}), Error);
  Run a = testing::constant_run(Eigen::Vector2d(0, 0), 2);
  Run b = testing::constant_run(Eigen::Vector2d(0, 0), 3);
  CHECK_THROWS_AS(Ensemble({a, b}), Error);
  const Ensemble ens({a});
  const Formula f = Formula::eventually(0, 5, Formula::atom(AffinePredicate(Eigen::Vector2d(1, 0), 0)));
  CHECK_THROWS_AS(stl_risk(ens, 0, f, RiskSpec::expectation()), Error);
  CHECK_THROWS_AS(stl_risk(ens, 0, Formula::top(), RiskSpec::drvar(0.1)), Error);
}
