#include "stlrisk/tightening.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "stlrisk/error.hpp"
#include "stlrisk/risk_measures.hpp"

namespace stlrisk {

LtvSystem::LtvSystem(std::vector<Eigen::MatrixXd> A, std::vector<Eigen::MatrixXd> B,
                     std::vector<Eigen::VectorXd> w_mean, std::vector<Eigen::MatrixXd> w_cov,
                     int horizon)
    : A_(std::move(A)), B_(std::move(B)), w_mean_(std::move(w_mean)), w_cov_(std::move(w_cov)),
      horizon_(horizon) {
  if (A_.empty() || B_.empty() || w_mean_.empty() || w_cov_.empty()) {
    throw Error(ErrorCategory::Config, "system needs A, B, w_mean and w_cov");
  }
  if (horizon_ < 0) throw Error(ErrorCategory::Domain, "system horizon must be nonnegative");
  n_ = static_cast<int>(A_.front().rows());
  m_ = static_cast<int>(B_.front().cols());
  if (n_ == 0) throw Error(ErrorCategory::Dimension, "state dimension must be positive");
  auto check_len = [&](std::size_t len, const char* what) {
    if (len != 1 && static_cast<int>(len) < horizon_) {
      throw Error(ErrorCategory::Horizon, std::string(what) + " has " + std::to_string(len) +
                                              " entries but the horizon is " +
                                              std::to_string(horizon_));
    }
  };
  check_len(A_.size(), "A");
  check_len(B_.size(), "B");
  check_len(w_mean_.size(), "w_mean");
  check_len(w_cov_.size(), "w_cov");
  for (const auto& a : A_) {
    if (a.rows() != n_ || a.cols() != n_) throw Error(ErrorCategory::Dimension, "A must be n x n");
  }
  for (const auto& b : B_) {
    if (b.rows() != n_ || b.cols() != m_) throw Error(ErrorCategory::Dimension, "B must be n x m");
  }
  for (const auto& w : w_mean_) {
    if (w.size() != n_) throw Error(ErrorCategory::Dimension, "w_mean must have length n");
  }
  for (const auto& s : w_cov_) {
    if (s.rows() != n_ || s.cols() != n_) {
      throw Error(ErrorCategory::Dimension, "w_cov must be n x n");
    }
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw Error(ErrorCategory::Domain, "disturbance covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) {
      throw Error(ErrorCategory::Domain, "disturbance covariance is not positive semidefinite");
    }
  }
}

LtvSystem LtvSystem::time_invariant(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                    const Eigen::VectorXd& w_mean, const Eigen::MatrixXd& w_cov,
                                    int horizon) {
  return LtvSystem({A}, {B}, {w_mean}, {w_cov}, horizon);
}

template <class T>
const T& LtvSystem::pick(const std::vector<T>& list, int t, const char* what) const {
  if (t < 0) throw Error(ErrorCategory::Horizon, std::string(what) + " at negative step");
  if (list.size() == 1) return list.front();
  if (t >= static_cast<int>(list.size())) {
    throw Error(ErrorCategory::Horizon,
                std::string(what) + " is not defined at step " + std::to_string(t));
  }
  return list[static_cast<std::size_t>(t)];
}

const Eigen::MatrixXd& LtvSystem::A(int t) const { return pick(A_, t, "A"); }
const Eigen::MatrixXd& LtvSystem::B(int t) const { return pick(B_, t, "B"); }
const Eigen::VectorXd& LtvSystem::w_mean(int t) const { return pick(w_mean_, t, "w_mean"); }
const Eigen::MatrixXd& LtvSystem::w_cov(int t) const { return pick(w_cov_, t, "w_cov"); }

bool LtvSystem::deterministic() const {
  return std::all_of(w_cov_.begin(), w_cov_.end(),
                     [](const Eigen::MatrixXd& s) { return (s.array() == 0.0).all(); });
}

Eigen::MatrixXd transition_matrix(const LtvSystem& sys, int tau, int t) {
  if (t < 0 || tau < t) {
    throw Error(ErrorCategory::Domain, "transition matrix needs 0 <= t <= tau");
  }
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(sys.state_dim(), sys.state_dim());
  for (int k = t; k < tau; ++k) phi = sys.A(k) * phi;
  return phi;
}

StackedDynamics stacked_dynamics(const LtvSystem& sys, int t) {
  if (t < 0) throw Error(ErrorCategory::Domain, "stacked dynamics at negative step");
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  StackedDynamics s;
  s.H.resize(n, static_cast<Eigen::Index>(t) * m);
  s.L.resize(n, static_cast<Eigen::Index>(t) * n);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);  // Phi(t, k+1)
  for (int k = t - 1; k >= 0; --k) {
    s.L.middleCols(static_cast<Eigen::Index>(k) * n, n) = phi;
    s.H.middleCols(static_cast<Eigen::Index>(k) * m, m) = phi * sys.B(k);
    phi = phi * sys.A(k);
  }
  s.G = phi;
  return s;
}

std::vector<Eigen::VectorXd> mean_rollout(const LtvSystem& sys, const Eigen::VectorXd& x0,
                                          const std::vector<Eigen::VectorXd>& u, int steps) {
  if (x0.size() != sys.state_dim()) {
    throw Error(ErrorCategory::Dimension, "initial state has the wrong dimension");
  }
  if (static_cast<int>(u.size()) < steps) {
    throw Error(ErrorCategory::Horizon, "control sequence shorter than the rollout");
  }
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(static_cast<std::size_t>(steps) + 1);
  xs.push_back(x0);
  for (int s = 0; s < steps; ++s) {
    const auto& us = u[static_cast<std::size_t>(s)];
    if (us.size() != sys.input_dim()) {
      throw Error(ErrorCategory::Dimension, "control has the wrong dimension");
    }
    xs.push_back(sys.A(s) * xs.back() + sys.B(s) * us + sys.w_mean(s));
  }
  return xs;
}

Eigen::MatrixXd prediction_covariance(const LtvSystem& sys, int t) {
  if (t < 0) throw Error(ErrorCategory::Domain, "covariance at negative step");
  const int n = sys.state_dim();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < t; ++k) {
    p = sys.A(k) * p * sys.A(k).transpose() + sys.w_cov(k);
    p = 0.5 * (p + p.transpose());
  }
  return p;
}

namespace {

double quadratic_margin(const Eigen::MatrixXd& cov, const AffinePredicate& pred, double factor) {
  const Eigen::Index k = pred.a().size();
  if (k > cov.rows()) {
    throw Error(ErrorCategory::Dimension, "predicate longer than the state dimension");
  }
  const double q = pred.a().dot(cov.topLeftCorner(k, k) * pred.a());
  return factor * std::sqrt(std::max(q, 0.0));
}

}  // namespace

double TightenedPredicate::value(const Eigen::VectorXd& mean_state) const {
  const double alpha = base.affine(mean_state);
  return (sign == Sign::Minus ? alpha : -alpha) - margin;
}

TightenedPredicate tighten_predicate(const Eigen::MatrixXd& state_cov, const AffinePredicate& pred,
                                     Sign sign, int t, double delta) {
  return {pred, sign, t, quadratic_margin(state_cov, pred, drvar_margin_factor(delta))};
}

TightenedPredicate tighten_predicate(const LtvSystem& sys, const AffinePredicate& pred, Sign sign,
                                     int t, double delta) {
  return tighten_predicate(prediction_covariance(sys, t), pred, sign, t, delta);
}

namespace {

class Tightener {
 public:
  Tightener(const LtvSystem& sys, const RiskBounds& bounds, int last, const TightenOptions& opts)
      : bounds_(bounds) {
    const int clamp = opts.saturation ? std::max(0, *opts.saturation) : last;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(sys.state_dim(), sys.state_dim());
    covs_.reserve(static_cast<std::size_t>(last) + 1);
    for (int s = 0; s <= last; ++s) {
      if (s > 0 && s <= clamp) {
        p = sys.A(s - 1) * p * sys.A(s - 1).transpose() + sys.w_cov(s - 1);
        p = 0.5 * (p + p.transpose());
      }
      covs_.push_back(p);
    }
  }

  const Eigen::MatrixXd& cov(int s) const { return covs_.at(static_cast<std::size_t>(s)); }

  std::vector<double> schedule(const AffinePredicate& pred) const {
    const double factor = drvar_margin_factor(bounds_(pred));
    std::vector<double> m;
    m.reserve(covs_.size());
    for (const auto& c : covs_) m.push_back(quadratic_margin(c, pred, factor));
    return m;
  }

  Formula rewrite(const Formula& f) const {
    switch (f.kind()) {
      case NodeKind::True:
      case NodeKind::False: return f;
      case NodeKind::Atom: {
        const auto& p = f.predicate();
        return Formula::atom(p.with_margins(schedule(p)));
      }
      case NodeKind::NegAtom: {
        const auto& p = f.predicate();
        return Formula::atom(p.negated().with_margins(schedule(p)));
      }
      case NodeKind::And:
      case NodeKind::Or: {
        std::vector<Formula> cs;
        for (const auto& c : f.children()) cs.push_back(rewrite(c));
        return f.kind() == NodeKind::And ? Formula::conjunction(std::move(cs))
                                         : Formula::disjunction(std::move(cs));
      }
      case NodeKind::Until:
        return Formula::until(f.lo(), f.hi(), rewrite(f.left()), rewrite(f.right()));
      case NodeKind::Release:
        return Formula::release(f.lo(), f.hi(), rewrite(f.left()), rewrite(f.right()));
      case NodeKind::Not: break;
    }
    throw Error(ErrorCategory::Domain, "tightening requires negation normal form");
  }

 private:
  const RiskBounds& bounds_;
  std::vector<Eigen::MatrixXd> covs_;
};

}  // namespace

Formula tighten_formula(const Formula& f, const LtvSystem& sys, const RiskBounds& bounds, int t,
                        const TightenOptions& options) {
  if (t < 0) throw Error(ErrorCategory::Domain, "tightening from a negative step");
  Tightener tt(sys, bounds, t + horizon(f), options);
  return tt.rewrite(f);
}

std::vector<MarginRow> margin_table(const Formula& f, const LtvSystem& sys,
                                   const RiskBounds& bounds, int t, const TightenOptions& options) {
  if (t < 0) throw Error(ErrorCategory::Domain, "tightening from a negative step");
  Tightener tt(sys, bounds, t + horizon(f), options);
  std::vector<MarginRow> rows;
  std::set<std::tuple<std::string, int, int>> seen;
  auto visit = [&](auto&& self, const AtomicRiskTree& node) -> void {
    if (node.kind == RiskNodeKind::Leaf) {
      const auto& l = node.leaf;
      std::string name = l.predicate.name().empty() ? print(l.predicate) : l.predicate.name();
      if (!seen.emplace(name, static_cast<int>(l.sign), l.time).second) return;
      const double m = quadratic_margin(tt.cov(l.time), l.predicate,
                                        drvar_margin_factor(l.bound));
      rows.push_back({std::move(name), l.sign, l.time, l.bound, m});
      return;
    }
    for (const auto& c : node.children) self(self, c);
  };
  visit(visit, decompose(f, t, bounds));
  std::stable_sort(rows.begin(), rows.end(), [](const MarginRow& a, const MarginRow& b) {
    return std::tie(a.predicate, a.sign, a.time) < std::tie(b.predicate, b.sign, b.time);
  });
  return rows;
}

namespace {

Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal();
}

Eigen::VectorXd standard_draw(int n, DisturbanceLaw law, std::mt19937_64& rng) {
  Eigen::VectorXd xi(n);
  if (law == DisturbanceLaw::Gaussian) {
    std::normal_distribution<double> g;
    for (int i = 0; i < n; ++i) xi[i] = g(rng);
  } else {
    // t(3) has variance 3
    std::student_t_distribution<double> st(3.0);
    const double scale = 1.0 / std::sqrt(3.0);
    for (int i = 0; i < n; ++i) xi[i] = st(rng) * scale;
  }
  return xi;
}

}  // namespace

Eigen::VectorXd sample_disturbance(const LtvSystem& sys, int t, DisturbanceLaw law,
                                   std::mt19937_64& rng) {
  return sys.w_mean(t) + covariance_root(sys.w_cov(t)) * standard_draw(sys.state_dim(), law, rng);
}

Ensemble simulate_ensemble(const LtvSystem& sys, const Eigen::VectorXd& x0,
                           const std::vector<Eigen::VectorXd>& u, int steps, int samples,
                           DisturbanceLaw law, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCategory::Domain, "ensemble needs at least one sample");
  if (static_cast<int>(u.size()) < steps) {
    throw Error(ErrorCategory::Horizon, "control sequence shorter than the rollout");
  }
  std::vector<Eigen::MatrixXd> roots;
  for (int s = 0; s < steps; ++s) roots.push_back(covariance_root(sys.w_cov(s)));
  std::mt19937_64 rng(seed);
  std::vector<Run> runs;
  runs.reserve(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    Run r;
    r.states.reserve(static_cast<std::size_t>(steps) + 1);
    r.states.push_back(x0);
    for (int s = 0; s < steps; ++s) {
      const Eigen::VectorXd w = sys.w_mean(s) + roots[static_cast<std::size_t>(s)] *
                                                    standard_draw(sys.state_dim(), law, rng);
      r.states.push_back(sys.A(s) * r.states.back() + sys.B(s) * u[static_cast<std::size_t>(s)] + w);
    }
    runs.push_back(std::move(r));
  }
  return Ensemble(std::move(runs));
}

}  // namespace stlrisk
