#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stlrisk/formula.hpp"
#include "stlrisk/risk_semantics.hpp"

namespace stlrisk {

/// X_{t+1} = A_t X_t + B_t u_t + W_t with E[W_t] = w_mean[t] and
/// Cov[W_t] = w_cov[t], disturbances independent across steps.
///
/// Each per-step list either has one entry (time invariant) or at least
/// `horizon` entries.
class LtvSystem {
 public:
  LtvSystem(std::vector<Eigen::MatrixXd> A, std::vector<Eigen::MatrixXd> B,
            std::vector<Eigen::VectorXd> w_mean, std::vector<Eigen::MatrixXd> w_cov, int horizon);

  static LtvSystem time_invariant(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  const Eigen::VectorXd& w_mean, const Eigen::MatrixXd& w_cov,
                                  int horizon);

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  int horizon() const { return horizon_; }

  const Eigen::MatrixXd& A(int t) const;
  const Eigen::MatrixXd& B(int t) const;
  const Eigen::VectorXd& w_mean(int t) const;
  const Eigen::MatrixXd& w_cov(int t) const;

  bool deterministic() const;

 private:
  template <class T>
  const T& pick(const std::vector<T>& list, int t, const char* what) const;

  std::vector<Eigen::MatrixXd> A_, B_;
  std::vector<Eigen::VectorXd> w_mean_;
  std::vector<Eigen::MatrixXd> w_cov_;
  int n_ = 0, m_ = 0, horizon_ = 0;
};

/// X_t = G x0 + H u_{0:t-1} + L W_{0:t-1}
struct StackedDynamics {
  Eigen::MatrixXd G;  // n x n
  Eigen::MatrixXd H;  // n x (t*m)
  Eigen::MatrixXd L;  // n x (t*n)
};

/// Phi(tau, t) = A_{tau-1} ... A_t, identity when tau == t.
Eigen::MatrixXd transition_matrix(const LtvSystem& sys, int tau, int t);

StackedDynamics stacked_dynamics(const LtvSystem& sys, int t);

/// Nominal trajectory x_bar_0..x_bar_steps driven by the disturbance mean.
std::vector<Eigen::VectorXd> mean_rollout(const LtvSystem& sys, const Eigen::VectorXd& x0,
                                          const std::vector<Eigen::VectorXd>& u, int steps);

/// Cov(X_t) = L blockdiag(Sigma_W0..Sigma_W{t-1}) L^T.
Eigen::MatrixXd prediction_covariance(const LtvSystem& sys, int t);

/// Risk-tightened affine predicate on the mean state.
///
/// sign Minus encodes rho(-alpha(X_t)) <= delta and holds iff
/// a^T x + b - margin >= 0; sign Plus encodes rho(alpha(X_t)) <= delta and
/// holds iff -a^T x - b - margin >= 0.
struct TightenedPredicate {
  AffinePredicate base;
  Sign sign = Sign::Minus;
  int time = 0;
  double margin = 0.0;

  double value(const Eigen::VectorXd& mean_state) const;
  bool holds(const Eigen::VectorXd& mean_state) const { return value(mean_state) >= 0.0; }
};

/// DR-VaR tightening with the moment ambiguity set, using the given state
/// covariance directly.
TightenedPredicate tighten_predicate(const Eigen::MatrixXd& state_cov, const AffinePredicate& pred,
                                     Sign sign, int t, double delta);

TightenedPredicate tighten_predicate(const LtvSystem& sys, const AffinePredicate& pred, Sign sign,
                                     int t, double delta);

struct TightenOptions {
  /// Margins at steps after this one are clamped to the margin at it.
  std::optional<int> saturation;
};

/// Replaces every atom of f (negation normal form) by its DR-VaR tightened
/// counterpart. Negated atoms become positive atoms on -alpha. The returned
/// atoms carry margin schedules over absolute steps 0..t+len(f), computed
/// from the prediction covariance of `sys` (state at step 0 known).
Formula tighten_formula(const Formula& f, const LtvSystem& sys, const RiskBounds& bounds, int t,
                        const TightenOptions& options = {});

/// One row per (atom, step) reachable when evaluating f from t.
struct MarginRow {
  std::string predicate;
  Sign sign = Sign::Minus;
  int time = 0;
  double delta = 0.0;
  double margin = 0.0;
};

std::vector<MarginRow> margin_table(const Formula& f, const LtvSystem& sys,
                                    const RiskBounds& bounds, int t,
                                    const TightenOptions& options = {});

enum class DisturbanceLaw { Gaussian, StudentT3 };

/// Draws W_t with the system's moments. StudentT3 uses independent
/// coordinates of a t(3) variable scaled to unit variance, mapped through a
/// covariance square root.
Eigen::VectorXd sample_disturbance(const LtvSystem& sys, int t, DisturbanceLaw law,
                                   std::mt19937_64& rng);

/// Monte-Carlo ensemble of the closed-form open-loop system.
Ensemble simulate_ensemble(const LtvSystem& sys, const Eigen::VectorXd& x0,
                           const std::vector<Eigen::VectorXd>& u, int steps, int samples,
                           DisturbanceLaw law, std::uint64_t seed);

}  // namespace stlrisk
