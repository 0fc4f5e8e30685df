#include <doctest.h>

#include <cmath>

#include "stlrisk/error.hpp"
#include "stlrisk/formula.hpp"
#include "stlrisk/semantics.hpp"
#include "support.hpp"

using namespace stlrisk;
using stlrisk::testing::FormulaShape;

namespace {

AffinePredicate pred1(double a0, double b, std::string name = {}) {
  return AffinePredicate(Eigen::VectorXd::Constant(1, a0), b, std::move(name));
}

PredicateEnv example_env() {
  PredicateEnv env;
  env.emplace("p1", AffinePredicate(Eigen::Vector3d(1, 0, 0), -0.5));
  env.emplace("p2", AffinePredicate(Eigen::Vector3d(0, 1, 0), 0.0));
  env.emplace("p3", AffinePredicate(Eigen::Vector3d(0, 0, -1), 1.0));
  return env;
}

Eigen::VectorXd v(std::initializer_list<double> xs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("atom text parses to its coefficients") {
  const Formula f = parse("(1*x0 + -0.5 >= 0)");
  REQUIRE(f.kind() == NodeKind::Atom);
  CHECK(f.predicate().a().size() == 1);
  CHECK(f.predicate().a()[0] == 1.0);
  CHECK(f.predicate().b() == -0.5);

  const Formula g = parse("(x2 - 2*x0 <= 3)");
  REQUIRE(g.kind() == NodeKind::Atom);
  CHECK(g.predicate() == AffinePredicate(v({2, 0, -1}), 3.0));
}

TEST_CASE("always sugar expands to release with bot") {
  const auto env = example_env();
  const Formula f = parse("G[0,3] (p1 and p2)", {&env});
  REQUIRE(f.kind() == NodeKind::Release);
  CHECK(f.lo() == 0);
  CHECK(f.hi() == 3);
  CHECK(f.left().kind() == NodeKind::False);
  CHECK(f.right().kind() == NodeKind::And);
  CHECK(f.right().children().size() == 2);

  const Formula e = parse("F[1,2] p1", {&env});
  REQUIRE(e.kind() == NodeKind::Until);
  CHECK(e.left().kind() == NodeKind::True);
}

TEST_CASE("example formula parses into until over a conjunction with a negated atom") {
  const auto env = example_env();
  const Formula f = parse("p1 U[3,5] (p2 and not p3)", {&env});
  REQUIRE(f.kind() == NodeKind::Until);
  CHECK(f.lo() == 3);
  CHECK(f.hi() == 5);
  CHECK(f.left().kind() == NodeKind::Atom);
  CHECK(f.left().predicate().name() == "p1");
  const Formula& r = f.right();
  REQUIRE(r.kind() == NodeKind::And);
  CHECK(r.children()[0].kind() == NodeKind::Atom);
  CHECK(r.children()[1].kind() == NodeKind::NegAtom);
  CHECK(r.children()[1].predicate().name() == "p3");
  CHECK(horizon(f) == 5);
}

TEST_CASE("negation normal form uses the operator duals") {
  const auto env = example_env();
  const Formula p1 = parse("p1", {&env});
  const Formula p2 = parse("p2", {&env});

  const Formula demorgan = to_nnf(Formula::negation(Formula::conjunction({p1, p2})));
  CHECK(demorgan == Formula::disjunction({Formula::neg_atom(p1.predicate()),
                                          Formula::neg_atom(p2.predicate())}));

  const Formula until = to_nnf(Formula::negation(Formula::until(1, 4, p1, p2)));
  CHECK(until == Formula::release(1, 4, Formula::neg_atom(p1.predicate()),
                                  Formula::neg_atom(p2.predicate())));

  CHECK(to_nnf(Formula::negation(Formula::negation(p1))) == p1);
  CHECK(to_nnf(Formula::negation(Formula::top())) == Formula::bottom());
  CHECK(parse("not not p1", {&env}) == p1);
}

TEST_CASE("horizon recursion") {
  const auto env = example_env();
  CHECK(horizon(parse("p1", {&env})) == 0);
  CHECK(horizon(parse("top")) == 0);
  CHECK(horizon(parse("G[0,2] F[1,3] p1 or p2", {&env})) == 5);
  CHECK(horizon(parse("(p1 U[0,2] G[1,1] p2) and F[0,7] p3", {&env})) == 7);

  // Two-agent mission in seconds: max(3, 3, 3).
  const char* mission = "G[0,3] (p1 and p2) and F[2,3] p3 and G[1,3] p1";
  CHECK(horizon(parse(mission, {&env, 1.0})) == 3);
  CHECK(horizon(parse(mission, {&env, 0.5})) == 6);
  CHECK(horizon(parse(mission, {&env, 0.2})) == 15);
}

TEST_CASE("seconds map to steps outward") {
  CHECK(seconds_to_steps(0.0, 3.0, 0.5) == std::pair{0, 6});
  CHECK(seconds_to_steps(2.0, 3.0, 0.2) == std::pair{10, 15});
  CHECK(seconds_to_steps(0.25, 0.75, 0.5) == std::pair{0, 2});
  CHECK(seconds_to_steps(0.3, 0.9, 0.1) == std::pair{3, 9});
  CHECK_THROWS_AS(seconds_to_steps(1.0, 2.0, 0.0), Error);
}

TEST_CASE("parse errors carry a position") {
  const auto env = example_env();
  CHECK_THROWS_AS(parse("p1 U[5,3] p2", {&env}), ParseError);
  CHECK_THROWS_AS(parse("p1 and", {&env}), ParseError);
  CHECK_THROWS_AS(parse("unknown_name", {&env}), ParseError);
  CHECK_THROWS_AS(parse("(0*x0 + 1 >= 0)"), ParseError);
  CHECK_THROWS_AS(parse("F[0.5,1] (x0 >= 0)"), ParseError);
  try {
    parse("(x0 >= 0) and )");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 14);
    CHECK(e.category() == ErrorCategory::Parse);
  }
}

TEST_CASE("predicates reject degenerate coefficients") {
  CHECK_THROWS_AS(AffinePredicate(Eigen::VectorXd::Zero(2), 1.0), Error);
  CHECK_THROWS_AS(AffinePredicate(Eigen::VectorXd(), 1.0), Error);
  CHECK_THROWS_AS(Formula::until(3, 1, Formula::top(), Formula::top()), Error);
  CHECK_THROWS_AS(Formula::always(-1, 1, Formula::top()), Error);
}

TEST_CASE("print and parse round trip") {
  const auto env = example_env();
  for (const char* text : {"p1 U[3,5] (p2 and not p3)", "G[0,3] (p1 or F[1,2] p2)",
                           "(p1 R[0,2] p2) and top", "not (p1 U[0,1] bot)"}) {
    const Formula f = parse(text, {&env});
    CHECK(parse(print(f)) == f);
  }
  std::mt19937_64 rng(7);
  FormulaShape shape;
  shape.depth = 4;
  shape.general_negation = true;
  for (int i = 0; i < 300; ++i) {
    const Formula f = to_nnf(testing::random_formula(rng, shape));
    const std::string text = print(f);
    CAPTURE(text);
    CHECK(parse(text) == f);
  }
}

TEST_CASE("Boolean semantics on hand cases") {
  const Formula x_pos = Formula::atom(pred1(1.0, 0.0));
  CHECK(satisfies(testing::constant_run(v({1.0}), 0), 0, x_pos));
  CHECK(satisfies(testing::constant_run(v({1.0}), 4), 3, x_pos));
  CHECK(satisfies(testing::constant_run(v({-1.0}), 0), 0, Formula::top()));
  CHECK_FALSE(satisfies(testing::constant_run(v({1.0}), 0), 0, Formula::bottom()));

  // x = 0,1,2,3,4: F[2,4] (x >= 3.5) holds only through step 4.
  Run ramp;
  for (int i = 0; i <= 4; ++i) ramp.states.push_back(v({static_cast<double>(i)}));
  const Formula late = Formula::eventually(2, 4, Formula::atom(pred1(1.0, -3.5)));
  CHECK(satisfies(ramp, 0, late));
  CHECK(robustness(ramp, 0, late) == doctest::Approx(0.5));
  const Formula always_small = Formula::always(0, 4, Formula::atom(pred1(-1.0, 3.0)));
  CHECK_FALSE(satisfies(ramp, 0, always_small));
  CHECK(robustness(ramp, 0, always_small) == doctest::Approx(-1.0));
}

TEST_CASE("robustness of atoms and conjunctions") {
  const Run r = testing::constant_run(v({0.7, -0.2}), 0);
  const Formula a = Formula::atom(AffinePredicate(v({1.0, 0.0}), 0.0));
  const Formula b = Formula::atom(AffinePredicate(v({0.0, -1.0}), 0.0));
  CHECK(robustness(r, 0, a) == doctest::Approx(0.7));
  CHECK(robustness(r, 0, Formula::conjunction({a, b})) == doctest::Approx(0.2));
  CHECK(robustness(r, 0, Formula::disjunction({a, b})) == doctest::Approx(0.7));
  CHECK(robustness(r, 0, Formula::neg_atom(a.predicate())) == doctest::Approx(-0.7));
}

TEST_CASE("until matches its quantifier expansion") {
  const auto env = example_env();
  const Formula f = parse("p1 U[3,5] (p2 and not p3)", {&env});
  const auto& p1 = env.at("p1");
  const auto& p2 = env.at("p2");
  const auto& p3 = env.at("p3");
  std::mt19937_64 rng(11);
  int agreed_true = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    Run run;
    for (int i = 0; i <= 6; ++i) {
      run.states.push_back(v({testing::uniform(rng, 0.0, 2.0), testing::uniform(rng, -1.0, 2.0),
                              testing::uniform(rng, 0.0, 2.0)}));
    }
    const int t = testing::uniform_int(rng, 0, 1);
    bool expected = false;
    for (int tp = t + 3; tp <= t + 5; ++tp) {
      bool right = p2.value(run.at(tp)) >= 0 && p3.value(run.at(tp)) < 0;
      bool left = true;
      for (int tpp = t; tpp <= tp; ++tpp) left = left && p1.value(run.at(tpp)) >= 0;
      expected = expected || (right && left);
    }
    CHECK(satisfies(run, t, f) == expected);
    agreed_true += expected;
  }
  CHECK(agreed_true > 10);
}

TEST_CASE("robustness sign agrees with satisfaction and negation normal form preserves both") {
  std::mt19937_64 rng(3);
  FormulaShape shape;
  shape.depth = 4;
  shape.general_negation = true;
  for (int i = 0; i < 1000; ++i) {
    const Formula raw = testing::random_formula(rng, shape);
    const Formula f = to_nnf(raw);
    CHECK(horizon(f) == horizon(raw));
    const Run run = testing::random_run(rng, 2, horizon(f) + 2);
    const double r = robustness(run, 0, f);
    const bool s = satisfies(run, 0, f);
    if (r > 0) CHECK(s);
    if (r < 0) CHECK_FALSE(s);
    // The negation's NNF has exactly the negated robustness.
    const Formula neg = to_nnf(Formula::negation(f));
    CHECK(robustness(run, 0, neg) == -r);
    if (r != 0) CHECK(satisfies(run, 0, neg) == !s);
  }
}

TEST_CASE("evaluation errors") {
  const Formula f = Formula::always(0, 3, Formula::atom(AffinePredicate(v({1.0, 1.0}), 0.0)));
  CHECK_THROWS_AS(satisfies(testing::constant_run(v({1.0, 1.0}), 2), 0, f), Error);
  CHECK_THROWS_AS(robustness(testing::constant_run(v({1.0}), 3), 0, f), Error);
  try {
    satisfies(testing::constant_run(v({1.0, 1.0}), 2), 0, f);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Horizon);
  }
  try {
    satisfies(testing::constant_run(v({1.0}), 3), 0, f);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::Dimension);
  }
  CHECK_THROWS_AS(satisfies(testing::constant_run(v({1.0, 1.0}), 3), 0, Formula::negation(f)), Error);
}

TEST_CASE("constant simplification") {
  const Formula p = Formula::atom(pred1(1.0, 0.0));
  CHECK(simplify_constants(Formula::conjunction({Formula::top(), p})) == p);
  CHECK(simplify_constants(Formula::disjunction({Formula::top(), p})) == Formula::top());
  CHECK(simplify_constants(Formula::conjunction({Formula::bottom(), p})) == Formula::bottom());
}
