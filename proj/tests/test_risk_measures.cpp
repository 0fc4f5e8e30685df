#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "stlrisk/error.hpp"
#include "stlrisk/risk_measures.hpp"
#include "support.hpp"

using namespace stlrisk;

namespace {

// Rockafellar objective minimized on a fine grid plus every sample point.
double cvar_by_grid(const std::vector<double>& x, double delta) {
  auto obj = [&](double t) {
    double s = 0.0;
    for (double v : x) s += std::max(0.0, v - t);
    return t + s / (static_cast<double>(x.size()) * delta);
  };
  double best = std::numeric_limits<double>::infinity();
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  for (int i = 0; i <= 4000; ++i) best = std::min(best, obj(*lo + (*hi - *lo) * i / 4000.0));
  for (double v : x) best = std::min(best, obj(v));
  return best;
}

// inf over z > 0 by a dense log-spaced scan.
double evar_by_scan(const std::vector<double>& x, double delta) {
  double best = *std::max_element(x.begin(), x.end());
  for (int i = 0; i <= 20000; ++i) {
    const double z = std::pow(10.0, -6.0 + 9.0 * i / 20000.0);
    double m = 0.0;
    for (double v : x) m += std::exp(z * v);
    m /= static_cast<double>(x.size());
    const double val = std::log(m / delta) / z;
    if (std::isfinite(val)) best = std::min(best, val);
  }
  return best;
}

}  // namespace

TEST_CASE("empirical risk examples") {
  const std::vector<double> three{1, 2, 3};
  CHECK(eval_risk(RiskSpec::expectation(), three) == doctest::Approx(2.0));
  CHECK(eval_risk(RiskSpec::worst_case(), std::vector<double>{1, 5, 3}) == 5.0);

  std::vector<double> ten;
  for (int i = 1; i <= 10; ++i) ten.push_back(i);
  CHECK(eval_risk(RiskSpec::var(0.2), ten) == 8.0);
  CHECK(eval_risk(RiskSpec::var(1.0), ten) == -std::numeric_limits<double>::infinity());

  const std::vector<double> four{1, 2, 3, 4};
  CHECK(eval_risk(RiskSpec::cvar(0.5), four) == doctest::Approx(3.5));
  CHECK(eval_risk(RiskSpec::cvar(1.0), four) == doctest::Approx(2.5));
  // population variance of {1,2,3} is 2/3
  CHECK(eval_risk(RiskSpec::mean_variance(1.5), three) == doctest::Approx(3.0));
}

TEST_CASE("CVaR and EVaR agree with brute-force minimization") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> x;
    const int m = testing::uniform_int(rng, 1, 30);
    for (int i = 0; i < m; ++i) x.push_back(testing::uniform(rng, -3.0, 3.0));
    const double delta = testing::uniform(rng, 0.05, 1.0);
    CHECK(eval_risk(RiskSpec::cvar(delta), x) == doctest::Approx(cvar_by_grid(x, delta)).epsilon(1e-9));
    const double evar = eval_risk(RiskSpec::evar(delta), x);
    const double scan = evar_by_scan(x, delta);
    CHECK(evar <= scan + 1e-9);
    CHECK(evar == doctest::Approx(scan).epsilon(1e-5));
  }
}

TEST_CASE("quantile measures are ordered") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x;
    const int m = testing::uniform_int(rng, 1, 60);
    for (int i = 0; i < m; ++i) x.push_back(testing::uniform(rng, -5.0, 5.0));
    const double delta = testing::uniform(rng, 0.01, 1.0);
    const double var = eval_risk(RiskSpec::var(delta), x);
    const double cvar = eval_risk(RiskSpec::cvar(delta), x);
    const double evar = eval_risk(RiskSpec::evar(delta), x);
    const double worst = eval_risk(RiskSpec::worst_case(), x);
    CHECK(var <= cvar + 1e-9);
    CHECK(cvar <= evar + 1e-9);
    CHECK(evar <= worst + 1e-9);
  }
}

TEST_CASE("EVaR tends to the mean as delta tends to one") {
  std::mt19937_64 rng(2);
  std::vector<double> x;
  for (int i = 0; i < 50; ++i) x.push_back(testing::uniform(rng, -1.0, 4.0));
  const double mean = eval_risk(RiskSpec::expectation(), x);
  CHECK(eval_risk(RiskSpec::evar(1.0 - 1e-9), x) == doctest::Approx(mean).epsilon(1e-4));
  CHECK(eval_risk(RiskSpec::evar(0.3), std::vector<double>{2.0, 2.0}) == 2.0);
}

TEST_CASE("coherent measures satisfy the axioms on random pairs") {
  std::mt19937_64 rng(21);
  const std::vector<RiskSpec> coherent{RiskSpec::expectation(), RiskSpec::worst_case(),
                                       RiskSpec::cvar(0.2), RiskSpec::evar(0.2), RiskSpec::cvar(0.7),
                                       RiskSpec::evar(0.05)};
  for (int trial = 0; trial < 200; ++trial) {
    const int m = testing::uniform_int(rng, 1, 40);
    std::vector<double> x1, x2, bigger;
    for (int i = 0; i < m; ++i) {
      x1.push_back(testing::uniform(rng, -2.0, 2.0));
      x2.push_back(testing::uniform(rng, -2.0, 2.0));
      bigger.push_back(x1.back() + testing::uniform(rng, 0.0, 1.0));
    }
    const double c = testing::uniform(rng, -3.0, 3.0);
    const double beta = testing::uniform(rng, 0.0, 3.0);
    for (const auto& spec : coherent) {
      CAPTURE(spec.to_string());
      CHECK(spec.is_coherent());
      CHECK(axioms::monotone(spec, x1, bigger, 1e-9));
      CHECK(axioms::translation_invariant(spec, x1, c, 1e-9));
      CHECK(axioms::positively_homogeneous(spec, x1, beta, 1e-9));
      CHECK(axioms::subadditive(spec, x1, x2, 1e-9));
    }
  }
}

TEST_CASE("stored counterexamples") {
  // VaR is not subadditive.
  const std::vector<double> x1{0, 0, 0, 1}, x2{0, 0, 1, 0};
  const auto var = RiskSpec::var(0.3);
  CHECK(eval_risk(var, x1) == 0.0);
  CHECK(eval_risk(var, x2) == 0.0);
  CHECK(eval_risk(var, std::vector<double>{0, 0, 1, 1}) == 1.0);
  CHECK_FALSE(axioms::subadditive(var, x1, x2, 1e-9));
  CHECK_FALSE(var.is_coherent());

  // Mean-variance is not monotone.
  const auto mv = RiskSpec::mean_variance(1.0);
  const std::vector<double> low{-2, 1}, high{1, 1};
  CHECK(eval_risk(mv, low) == doctest::Approx(1.75));
  CHECK(eval_risk(mv, high) == doctest::Approx(1.0));
  CHECK_FALSE(axioms::monotone(mv, low, high, 1e-9));
}

TEST_CASE("distributionally robust violation probability") {
  CHECK(drvar_violation_prob(1.0, 5.0) == 1.0);
  CHECK(drvar_violation_prob(0.0, 0.0) == 1.0);
  CHECK(drvar_violation_prob(-3.0, 1.0) == doctest::Approx(0.1));
  CHECK(drvar_violation_prob(-1.0, 0.0) == 0.0);
  CHECK(drvar_margin_factor(0.5) == doctest::Approx(1.0));
  CHECK(drvar_margin_factor(0.1) == doctest::Approx(3.0));
  CHECK_THROWS_AS(drvar_violation_prob(-1.0, -0.1), Error);
  CHECK_THROWS_AS(drvar_margin_factor(1.0), Error);

  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const double m = testing::uniform(rng, -5.0, 1.0);
    const double v = testing::uniform(rng, 0.0, 4.0);
    const double dm = testing::uniform(rng, 0.0, 1.0);
    const double dv = testing::uniform(rng, 0.0, 1.0);
    CHECK(drvar_violation_prob(m, v) <= drvar_violation_prob(m + dm, v));
    CHECK(drvar_violation_prob(m, v) <= drvar_violation_prob(m, v + dv));
  }
}

TEST_CASE("risk spec text and validation") {
  for (const char* text : {"expectation", "worst", "mv:0.5", "var:0.1", "cvar:0.25", "evar:0.1",
                           "drvar:0.1"}) {
    CHECK(RiskSpec::from_string(text).to_string() == text);
  }
  CHECK_THROWS_AS(RiskSpec::from_string("cvar"), Error);
  CHECK_THROWS_AS(RiskSpec::from_string("median"), Error);
  CHECK_THROWS_AS(RiskSpec::var(0.0), Error);
  CHECK_THROWS_AS(RiskSpec::cvar(1.5), Error);
  CHECK_THROWS_AS(RiskSpec::drvar(1.0), Error);
  CHECK_THROWS_AS(RiskSpec::mean_variance(0.0), Error);
  CHECK_THROWS_AS(eval_risk(RiskSpec::expectation(), std::vector<double>{}), Error);
  CHECK_THROWS_AS(eval_risk(RiskSpec::drvar(0.1), std::vector<double>{1.0}), Error);
}
