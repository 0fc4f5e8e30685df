#include <doctest.h>

#include <cmath>

#include "stlrisk/error.hpp"
#include "stlrisk/semantics.hpp"
#include "stlrisk/stl_encoding.hpp"
#include "support.hpp"

using namespace stlrisk;
using stlrisk::testing::FormulaShape;

namespace {

LtvSystem random_system(std::mt19937_64& rng, int n, int m, int horizon) {
  Eigen::MatrixXd A(n, n), B(n, m);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = (i == j ? 1.0 : 0.0) + testing::uniform(rng, -0.3, 0.3);
    for (int j = 0; j < m; ++j) B(i, j) = testing::uniform(rng, -1.0, 1.0);
    w[i] = testing::uniform(rng, -0.1, 0.1);
  }
  return LtvSystem::time_invariant(A, B, w, Eigen::MatrixXd::Zero(n, n), horizon);
}

Run rollout(const LtvSystem& sys, const Eigen::VectorXd& x0, const std::vector<Eigen::VectorXd>& u) {
  Run run;
  run.states.push_back(x0);
  for (std::size_t s = 0; s < u.size(); ++s) {
    const int t = static_cast<int>(s);
    run.states.push_back(sys.A(t) * run.states.back() + sys.B(t) * u[s] + sys.w_mean(t));
  }
  return run;
}

// Smallest |alpha| over every atom of f at every step of the run.
double closest_boundary(const Formula& f, const Run& run) {
  double best = std::numeric_limits<double>::infinity();
  auto walk = [&](const auto& self, const Formula& g) -> void {
    if (g.kind() == NodeKind::Atom || g.kind() == NodeKind::NegAtom) {
      for (const auto& x : run.states) best = std::min(best, std::abs(g.predicate().value(x)));
    }
    if (g.kind() == NodeKind::And || g.kind() == NodeKind::Or) {
      for (const auto& c : g.children()) self(self, c);
    }
    if (g.kind() == NodeKind::Until || g.kind() == NodeKind::Release) {
      self(self, g.left());
      self(self, g.right());
    }
  };
  walk(walk, f);
  return best;
}

EncodeOptions mode(int which, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  EncodeOptions o;
  o.input_lower = lo;
  o.input_upper = hi;
  o.simplify = which & 1;
  o.condense = which & 2;
  o.split_inputs = which & 4;
  return o;
}

bool feasible(const StlEncoding& enc) { return solve_milp(enc.model).status == SolveStatus::Optimal; }

}  // namespace

TEST_CASE("single atom is feasible exactly when it holds") {
  const auto sys = LtvSystem::time_invariant(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                                             Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), 1);
  for (double b : {-1.0, -0.25, 0.0, 0.5}) {
    const Formula f = Formula::atom(AffinePredicate(Eigen::VectorXd::Constant(1, 1.0), b));
    const std::vector<Eigen::VectorXd> x0{Eigen::VectorXd::Constant(1, 0.0)};
    for (bool simplify : {false, true}) {
      EncodeOptions o;
      o.simplify = simplify;
      CHECK(feasible(encode_deterministic_stl(f, sys, x0, 0, o)) == (b >= 0.0));
    }
  }
}

TEST_CASE("literal encoding binary counts") {
  const auto sys = LtvSystem::time_invariant(Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3),
                                             Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 3), 6);
  const std::vector<Eigen::VectorXd> x0{Eigen::VectorXd::Zero(3)};
  const auto p = AffinePredicate(Eigen::Vector3d(1, 0, 0), -0.5, "p1");
  const auto q = AffinePredicate(Eigen::Vector3d(0, 1, 0), 0.0, "p2");
  const auto r = AffinePredicate(Eigen::Vector3d(0, 0, -1), 1.0, "p3");
  CHECK(encode_deterministic_stl(Formula::always(0, 2, Formula::atom(p)), sys, x0, 2).model.num_binaries() == 4);
  const Formula ex = Formula::until(3, 5, Formula::atom(p),
                                    Formula::conjunction({Formula::atom(q), Formula::neg_atom(r)}));
  const StlEncoding enc = encode_deterministic_stl(ex, sys, x0, 5);
  CHECK(enc.model.num_binaries() == 19);
  CHECK(enc.root >= 0);
  CHECK(enc.model.variables()[static_cast<std::size_t>(enc.root)].lower == 1.0);
}

TEST_CASE("fixed inputs: encodings agree with the Boolean semantics") {
  std::mt19937_64 rng(51);
  FormulaShape shape;
  shape.depth = 3;
  int sat = 0, checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const Formula f = testing::random_formula(rng, shape);
    const int H = horizon(f);
    const LtvSystem sys = random_system(rng, 2, 1, H);
    std::vector<Eigen::VectorXd> u;
    for (int s = 0; s < H; ++s) u.push_back(Eigen::VectorXd::Constant(1, testing::uniform(rng, -1.0, 1.0)));
    const Eigen::VectorXd x0 = Eigen::Vector2d(testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1));
    const Run run = rollout(sys, x0, u);
    if (closest_boundary(f, run) < 1e-4) continue;
    const bool truth = satisfies(run, 0, f);
    ++checked;
    sat += truth;
    for (int which = 0; which < 8; ++which) {
      // Pin each input through its box.
      EncodeOptions o = mode(which, Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0));
      StlEncoding enc = encode_deterministic_stl(f, sys, {x0}, H, o);
      for (int s = 0; s < H; ++s) {
        const auto& pos = enc.input_vars[static_cast<std::size_t>(s)];
        const double v = u[static_cast<std::size_t>(s)][0];
        if (o.split_inputs) {
          const int q = enc.input_neg_vars[static_cast<std::size_t>(s)][0];
          enc.model.set_bounds(pos[0], std::max(v, 0.0), std::max(v, 0.0));
          enc.model.set_bounds(q, std::max(-v, 0.0), std::max(-v, 0.0));
        } else {
          enc.model.set_bounds(pos[0], v, v);
        }
      }
      CAPTURE(print(f));
      CAPTURE(which);
      CHECK(feasible(enc) == truth);
    }
  }
  CHECK(checked > 100);
  CHECK(sat > 20);
  CHECK(sat < checked - 20);
}

TEST_CASE("free inputs: modes agree, plans are sound and sampled witnesses are found") {
  std::mt19937_64 rng(52);
  FormulaShape shape;
  shape.depth = 3;
  int feasible_count = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Formula f = testing::random_formula(rng, shape);
    const int H = horizon(f);
    const LtvSystem sys = random_system(rng, 2, 1, H);
    const Eigen::VectorXd x0 = Eigen::Vector2d(testing::uniform(rng, -1, 1), testing::uniform(rng, -1, 1));
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(1, -0.5), hi = Eigen::VectorXd::Constant(1, 0.5);

    // Any sampled input sequence with slack robustness is a witness.
    bool witness = false;
    for (int sample = 0; sample < 50 && !witness; ++sample) {
      std::vector<Eigen::VectorXd> u;
      for (int s = 0; s < H; ++s) u.push_back(Eigen::VectorXd::Constant(1, testing::uniform(rng, -0.5, 0.5)));
      witness = robustness(rollout(sys, x0, u), 0, f) > 1e-4;
    }

    std::vector<bool> verdicts;
    for (int which = 0; which < 8; ++which) {
      const StlEncoding enc = encode_deterministic_stl(f, sys, {x0}, H, mode(which, lo, hi));
      const MilpSolution s = solve_milp(enc.model);
      REQUIRE(s.status != SolveStatus::IterationLimit);
      verdicts.push_back(s.status == SolveStatus::Optimal);
      if (s.status != SolveStatus::Optimal) continue;
      const auto inputs = extract_inputs(enc, s.x);
      REQUIRE(inputs.size() == static_cast<std::size_t>(H));
      for (const auto& v : inputs) CHECK(std::abs(v[0]) <= 0.5 + 1e-7);
      const auto states = extract_states(enc, s.x);
      const Run replay = rollout(sys, x0, inputs);
      for (int t = 0; t <= H; ++t) {
        CHECK((states[static_cast<std::size_t>(t)] - replay.states[static_cast<std::size_t>(t)]).norm() <= 1e-6);
      }
      CAPTURE(print(f));
      CAPTURE(which);
      CHECK(robustness(replay, 0, f) >= -1e-6);
    }
    for (bool v : verdicts) CHECK(v == verdicts[0]);
    if (witness) CHECK(verdicts[0]);
    feasible_count += verdicts[0];
  }
  CHECK(feasible_count > 30);
}

TEST_CASE("contradictory atoms are infeasible") {
  const auto sys = LtvSystem::time_invariant(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                                             Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), 2);
  const auto above = AffinePredicate(Eigen::VectorXd::Constant(1, 1.0), -1.0);
  const auto below = AffinePredicate(Eigen::VectorXd::Constant(1, -1.0), 0.0);
  const Formula f = Formula::eventually(1, 1, Formula::conjunction({Formula::atom(above), Formula::atom(below)}));
  for (int which = 0; which < 8; ++which) {
    const auto enc = encode_deterministic_stl(f, sys, {Eigen::VectorXd::Zero(1)}, 1,
                                              mode(which, Eigen::VectorXd::Constant(1, -5), Eigen::VectorXd::Constant(1, 5)));
    CHECK(solve_milp(enc.model).status == SolveStatus::Infeasible);
  }
  const auto enc = encode_deterministic_stl(Formula::bottom(), sys, {Eigen::VectorXd::Zero(1)}, 0);
  CHECK(solve_milp(enc.model).status == SolveStatus::Infeasible);
}

TEST_CASE("known prefix steps are fixed") {
  const auto sys = LtvSystem::time_invariant(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                                             Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), 3);
  const auto pos = AffinePredicate(Eigen::VectorXd::Constant(1, 1.0), 0.0);
  const Formula g = Formula::always(0, 3, Formula::atom(pos));
  const std::vector<Eigen::VectorXd> ok{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 0.2)};
  const std::vector<Eigen::VectorXd> bad{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, -0.2)};
  const std::vector<Eigen::VectorXd> tiny{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, -1e-9)};
  for (int which = 0; which < 8; ++which) {
    const auto o = mode(which, Eigen::VectorXd::Constant(1, -1), Eigen::VectorXd::Constant(1, 1));
    const auto enc = encode_deterministic_stl(g, sys, ok, 3, o);
    CHECK(enc.first_free_step == 1);
    const MilpSolution s = solve_milp(enc.model);
    REQUIRE(s.status == SolveStatus::Optimal);
    const auto states = extract_states(enc, s.x);
    CHECK(states[1][0] == doctest::Approx(0.2));
    CHECK(extract_inputs(enc, s.x).size() == 2);
    CHECK(solve_milp(encode_deterministic_stl(g, sys, bad, 3, o).model).status == SolveStatus::Infeasible);
    // Roundoff-level misses on the realized past are tolerated when folding.
    if (o.simplify) {
      CHECK(solve_milp(encode_deterministic_stl(g, sys, tiny, 3, o).model).status == SolveStatus::Optimal);
    }
  }
}

TEST_CASE("reachable boxes contain sampled rollouts") {
  std::mt19937_64 rng(53);
  const LtvSystem sys = random_system(rng, 3, 2, 5);
  const Eigen::VectorXd x0 = Eigen::Vector3d(0.1, -0.2, 0.3);
  const Eigen::VectorXd lo = Eigen::Vector2d(-1, -0.5), hi = Eigen::Vector2d(1, 0.5);
  std::vector<Eigen::VectorXd> bl, bh;
  reachable_boxes(sys, {x0}, 5, lo, hi, {}, {}, bl, bh);
  REQUIRE(bl.size() == 6);
  for (int sample = 0; sample < 200; ++sample) {
    std::vector<Eigen::VectorXd> u;
    for (int s = 0; s < 5; ++s) u.push_back(Eigen::Vector2d(testing::uniform(rng, -1, 1), testing::uniform(rng, -0.5, 0.5)));
    const Run run = rollout(sys, x0, u);
    for (int t = 0; t <= 5; ++t) {
      CHECK((run.states[static_cast<std::size_t>(t)].array() >= bl[static_cast<std::size_t>(t)].array() - 1e-9).all());
      CHECK((run.states[static_cast<std::size_t>(t)].array() <= bh[static_cast<std::size_t>(t)].array() + 1e-9).all());
    }
  }
}

TEST_CASE("encoder validation") {
  const auto sys = LtvSystem::time_invariant(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                                             Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), 3);
  const Formula f = Formula::eventually(0, 3, Formula::atom(AffinePredicate(Eigen::VectorXd::Constant(1, 1.0), 0.0)));
  const std::vector<Eigen::VectorXd> x0{Eigen::VectorXd::Zero(1)};
  CHECK_THROWS_AS(encode_deterministic_stl(f, sys, {}, 3), Error);
  CHECK_THROWS_AS(encode_deterministic_stl(f, sys, x0, 2), Error);
  CHECK_THROWS_AS(encode_deterministic_stl(Formula::negation(f), sys, x0, 3), Error);
  CHECK_THROWS_AS(encode_deterministic_stl(f, sys, {Eigen::VectorXd::Zero(2)}, 3), Error);
  EncodeOptions o;
  o.big_m = 0.0;
  CHECK_THROWS_AS(encode_deterministic_stl(f, sys, x0, 3, o), Error);
  const Formula wide = Formula::atom(AffinePredicate(Eigen::Vector2d(1.0, 1.0), 0.0));
  CHECK_THROWS_AS(encode_deterministic_stl(wide, sys, x0, 0), Error);
}
