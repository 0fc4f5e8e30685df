#include "stlrisk/risk_measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "stlrisk/error.hpp"

namespace stlrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_level(double delta, bool allow_one, const char* what) {
  const bool ok = allow_one ? (delta > 0.0 && delta <= 1.0) : (delta > 0.0 && delta < 1.0);
  if (!ok) {
    throw Error(ErrorCategory::Domain, std::string(what) + " level delta must lie in " +
                                           (allow_one ? "(0,1]" : "(0,1)"));
  }
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double population_variance(std::span<const double> x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

double value_at_risk(std::span<const double> x, double delta) {
  const auto m = static_cast<double>(x.size());
  const auto k = static_cast<long>(std::ceil((1.0 - delta) * m - 1e-9));
  if (k <= 0) return -kInf;
  std::vector<double> s(x.begin(), x.end());
  std::nth_element(s.begin(), s.begin() + (k - 1), s.end());
  return s[static_cast<std::size_t>(k - 1)];
}

// min over t of t + mean[(x - t)_+] / delta; the piecewise linear convex
// objective attains its minimum at an order statistic.
double conditional_value_at_risk(std::span<const double> x, double delta) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const std::size_t m = s.size();
  double best = kInf;
  double above = 0.0;  // sum of s[k+1..m-1]
  for (std::size_t k = m; k-- > 0;) {
    const double t = s[k];
    const double excess = above - static_cast<double>(m - 1 - k) * t;
    best = std::min(best, t + excess / (static_cast<double>(m) * delta));
    above += s[k];
  }
  return best;
}

double entropic_value_at_risk(std::span<const double> x, double delta) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double range = hi - lo;
  if (range == 0.0) return hi;
  const double mu = mean_of(x);
  const double log_delta = std::log(delta);
  // z^-1 (ln E[exp(zX)] - ln delta), written around the mean so small z
  // stays accurate: ln E[exp(zX)] = z mu + log1p(E[expm1(z (X - mu))]).
  auto objective = [&](double z) {
    double acc = 0.0;
    for (double v : x) acc += std::expm1(z * (v - mu));
    acc /= static_cast<double>(x.size());
    return mu + (std::log1p(acc) - log_delta) / z;
  };
  double a = 1e-8;
  double b = std::max(a, 500.0 / range);
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  for (int it = 0; it < 400 && (b - a) > 1e-10 * std::max(1.0, c); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
  }
  double best = std::min({fc, fd, objective(a), objective(b)});
  // The infimum includes the z -> infinity limit, the sample maximum.
  return std::min(best, hi);
}

double parse_number(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCategory::Config, "malformed risk parameter '" + std::string(text) + "'");
  }
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

RiskSpec::RiskSpec(MeasureKind kind, double parameter) : kind_(kind), parameter_(parameter) {}

RiskSpec RiskSpec::expectation() { return {MeasureKind::Expectation, 0.0}; }
RiskSpec RiskSpec::worst_case() { return {MeasureKind::WorstCase, 0.0}; }

RiskSpec RiskSpec::mean_variance(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCategory::Domain, "mean-variance weight lambda must be positive");
  }
  return {MeasureKind::MeanVariance, lambda};
}

RiskSpec RiskSpec::var(double delta) {
  require_level(delta, true, "VaR");
  return {MeasureKind::VaR, delta};
}

RiskSpec RiskSpec::cvar(double delta) {
  require_level(delta, true, "CVaR");
  return {MeasureKind::CVaR, delta};
}

RiskSpec RiskSpec::evar(double delta) {
  require_level(delta, true, "EVaR");
  return {MeasureKind::EVaR, delta};
}

RiskSpec RiskSpec::drvar(double delta) {
  require_level(delta, false, "DR-VaR");
  return {MeasureKind::DRVaR, delta};
}

RiskSpec RiskSpec::from_string(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const bool has_arg = colon != std::string_view::npos;
  auto arg = [&] {
    if (!has_arg) throw Error(ErrorCategory::Config, "risk measure '" + std::string(head) +
                                                         "' needs a parameter");
    return parse_number(text.substr(colon + 1));
  };
  if (head == "expectation" && !has_arg) return expectation();
  if (head == "worst" && !has_arg) return worst_case();
  if (head == "mv") return mean_variance(arg());
  if (head == "var") return var(arg());
  if (head == "cvar") return cvar(arg());
  if (head == "evar") return evar(arg());
  if (head == "drvar") return drvar(arg());
  throw Error(ErrorCategory::Config, "unknown risk measure '" + std::string(text) + "'");
}

std::string RiskSpec::to_string() const {
  switch (kind_) {
    case MeasureKind::Expectation: return "expectation";
    case MeasureKind::WorstCase: return "worst";
    case MeasureKind::MeanVariance: return "mv:" + format_number(parameter_);
    case MeasureKind::VaR: return "var:" + format_number(parameter_);
    case MeasureKind::CVaR: return "cvar:" + format_number(parameter_);
    case MeasureKind::EVaR: return "evar:" + format_number(parameter_);
    case MeasureKind::DRVaR: return "drvar:" + format_number(parameter_);
  }
  return {};
}

bool RiskSpec::is_coherent() const {
  return kind_ == MeasureKind::Expectation || kind_ == MeasureKind::WorstCase ||
         kind_ == MeasureKind::CVaR || kind_ == MeasureKind::EVaR;
}

double eval_risk(const RiskSpec& spec, std::span<const double> sample) {
  if (sample.empty()) throw Error(ErrorCategory::Domain, "risk of an empty sample");
  for (double v : sample) {
    if (!std::isfinite(v)) throw Error(ErrorCategory::Numeric, "sample contains a non-finite value");
  }
  switch (spec.kind()) {
    case MeasureKind::Expectation: return mean_of(sample);
    case MeasureKind::WorstCase: return *std::max_element(sample.begin(), sample.end());
    case MeasureKind::MeanVariance: {
      const double mu = mean_of(sample);
      return mu + spec.parameter() * population_variance(sample, mu);
    }
    case MeasureKind::VaR: return value_at_risk(sample, spec.parameter());
    case MeasureKind::CVaR: return conditional_value_at_risk(sample, spec.parameter());
    case MeasureKind::EVaR: return entropic_value_at_risk(sample, spec.parameter());
    case MeasureKind::DRVaR: break;
  }
  throw Error(ErrorCategory::Domain, "DR-VaR has no empirical evaluation; use drvar_violation_prob");
}

double drvar_violation_prob(double mean, double variance) {
  if (variance < 0.0 || !std::isfinite(variance) || !std::isfinite(mean)) {
    throw Error(ErrorCategory::Domain, "variance must be finite and nonnegative");
  }
  if (mean >= 0.0) return 1.0;
  return variance / (variance + mean * mean);
}

double drvar_margin_factor(double delta) {
  require_level(delta, false, "DR-VaR");
  return std::sqrt((1.0 - delta) / delta);
}

namespace axioms {

namespace {

bool close(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol;
}

void require_pair(std::span<const double> x1, std::span<const double> x2) {
  if (x1.size() != x2.size()) {
    throw Error(ErrorCategory::Dimension, "paired samples differ in size");
  }
}

}  // namespace

bool monotone(const RiskSpec& spec, std::span<const double> x1, std::span<const double> x2,
              double tol) {
  require_pair(x1, x2);
  for (std::size_t i = 0; i < x1.size(); ++i) {
    if (x1[i] > x2[i]) return true;  // premise fails, nothing to check
  }
  return eval_risk(spec, x1) <= eval_risk(spec, x2) + tol;
}

bool translation_invariant(const RiskSpec& spec, std::span<const double> x, double c, double tol) {
  std::vector<double> shifted(x.begin(), x.end());
  for (double& v : shifted) v += c;
  return close(eval_risk(spec, shifted), eval_risk(spec, x) + c, tol);
}

bool positively_homogeneous(const RiskSpec& spec, std::span<const double> x, double beta,
                            double tol) {
  if (beta < 0.0) throw Error(ErrorCategory::Domain, "homogeneity needs beta >= 0");
  std::vector<double> scaled(x.begin(), x.end());
  for (double& v : scaled) v *= beta;
  return close(eval_risk(spec, scaled), beta * eval_risk(spec, x), tol);
}

bool subadditive(const RiskSpec& spec, std::span<const double> x1, std::span<const double> x2,
                 double tol) {
  require_pair(x1, x2);
  std::vector<double> sum(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i) sum[i] = x1[i] + x2[i];
  return eval_risk(spec, sum) <= eval_risk(spec, x1) + eval_risk(spec, x2) + tol;
}

}  // namespace axioms

}  // namespace stlrisk
