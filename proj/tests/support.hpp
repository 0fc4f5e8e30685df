#pragma once

// Random instance generators shared by the unit and acceptance tests.

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stlrisk/formula.hpp"
#include "stlrisk/semantics.hpp"

namespace stlrisk::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline AffinePredicate random_predicate(std::mt19937_64& rng, int dim, const std::string& name = {}) {
  Eigen::VectorXd a(dim);
  do {
    for (int i = 0; i < dim; ++i) a[i] = std::round(uniform(rng, -2.0, 2.0) * 4.0) / 4.0;
  } while ((a.array() == 0.0).all());
  return AffinePredicate(a, std::round(uniform(rng, -1.0, 1.0) * 8.0) / 8.0, name);
}

struct FormulaShape {
  int dim = 2;
  int depth = 3;
  int max_interval = 3;
  /// Allow top/bot leaves.
  bool constants = true;
  /// Allow Not over compound subformulas (input for to_nnf).
  bool general_negation = false;
};

inline Formula random_formula(std::mt19937_64& rng, const FormulaShape& s, int depth) {
  const int leaf_kinds = s.constants ? 4 : 2;
  if (depth <= 0 || uniform_int(rng, 0, 3) == 0) {
    const int k = uniform_int(rng, 0, leaf_kinds - 1);
    const std::string name = "p" + std::to_string(uniform_int(rng, 1, 6));
    switch (k) {
      case 0: return Formula::atom(random_predicate(rng, s.dim, name));
      case 1: return Formula::neg_atom(random_predicate(rng, s.dim, name));
      case 2: return Formula::top();
      default: return Formula::bottom();
    }
  }
  const int op = uniform_int(rng, 0, s.general_negation ? 6 : 5);
  auto sub = [&] { return random_formula(rng, s, depth - 1); };
  const int a = uniform_int(rng, 0, s.max_interval);
  const int b = a + uniform_int(rng, 0, s.max_interval - a);
  switch (op) {
    case 0: {
      std::vector<Formula> c{sub(), sub()};
      if (uniform_int(rng, 0, 2) == 0) c.push_back(sub());
      return Formula::conjunction(std::move(c));
    }
    case 1: {
      std::vector<Formula> c{sub(), sub()};
      if (uniform_int(rng, 0, 2) == 0) c.push_back(sub());
      return Formula::disjunction(std::move(c));
    }
    case 2: return Formula::until(a, b, sub(), sub());
    case 3: return Formula::release(a, b, sub(), sub());
    case 4: return Formula::eventually(a, b, sub());
    case 5: return Formula::always(a, b, sub());
    default: return Formula::negation(sub());
  }
}

inline Formula random_formula(std::mt19937_64& rng, const FormulaShape& s) {
  return random_formula(rng, s, s.depth);
}

inline Run random_run(std::mt19937_64& rng, int dim, int length, int start = 0) {
  Run r;
  r.start = start;
  for (int i = 0; i <= length; ++i) {
    Eigen::VectorXd x(dim);
    for (int j = 0; j < dim; ++j) x[j] = uniform(rng, -2.0, 2.0);
    r.states.push_back(x);
  }
  return r;
}

inline Run constant_run(const Eigen::VectorXd& x, int length) {
  Run r;
  r.states.assign(static_cast<std::size_t>(length) + 1, x);
  return r;
}

}  // namespace stlrisk::testing
