#pragma once

#include <span>
#include <string>
#include <string_view>

namespace stlrisk {

enum class MeasureKind { Expectation, WorstCase, MeanVariance, VaR, CVaR, EVaR, DRVaR };

/// A risk measure together with its parameter (lambda for mean-variance,
/// delta for the quantile-type measures, unused otherwise).
class RiskSpec {
 public:
  static RiskSpec expectation();
  static RiskSpec worst_case();
  static RiskSpec mean_variance(double lambda);
  static RiskSpec var(double delta);
  static RiskSpec cvar(double delta);
  static RiskSpec evar(double delta);
  static RiskSpec drvar(double delta);

  /// Text form: "expectation", "worst", "mv:0.5", "var:0.1", "cvar:0.1",
  /// "evar:0.1", "drvar:0.1".
  static RiskSpec from_string(std::string_view text);
  std::string to_string() const;

  MeasureKind kind() const { return kind_; }
  double parameter() const { return parameter_; }
  bool is_empirical() const { return kind_ != MeasureKind::DRVaR; }
  /// True for the measures satisfying all four coherence axioms.
  bool is_coherent() const;

  friend bool operator==(const RiskSpec&, const RiskSpec&) = default;

 private:
  RiskSpec(MeasureKind kind, double parameter);
  MeasureKind kind_ = MeasureKind::Expectation;
  double parameter_ = 0.0;
};

/// Risk of an equally weighted empirical sample. Returns an extended real
/// (VaR at delta = 1 is -inf). DR-VaR has no empirical form and is rejected.
double eval_risk(const RiskSpec& spec, std::span<const double> sample);

/// sup over all laws of Y with the given mean and variance of P[Y >= 0]:
/// 1 when mean >= 0, variance / (variance + mean^2) otherwise.
double drvar_violation_prob(double mean, double variance);

/// sqrt((1 - delta) / delta), the DR-VaR tightening factor.
double drvar_margin_factor(double delta);

/// Coherence axiom checks on paired samples (x1[i], x2[i] share scenario i).
namespace axioms {
bool monotone(const RiskSpec& spec, std::span<const double> x1, std::span<const double> x2,
              double tol);
bool translation_invariant(const RiskSpec& spec, std::span<const double> x, double c, double tol);
bool positively_homogeneous(const RiskSpec& spec, std::span<const double> x, double beta,
                            double tol);
bool subadditive(const RiskSpec& spec, std::span<const double> x1, std::span<const double> x2,
                 double tol);
}  // namespace axioms

}  // namespace stlrisk
