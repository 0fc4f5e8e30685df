#include "simplex.hpp"

#include <cmath>
#include <memory>

#include "stlrisk/error.hpp"

namespace stlrisk::detail {

namespace {
constexpr double kPivotTol = 1e-9;
constexpr int kRefactorEvery = 100;
constexpr int kDegenerateBeforeBland = 50;
}  // namespace

LpData lp_data(const MilpModel& model) {
  const int n = model.num_variables();
  const int m = model.num_constraints();
  LpData d;
  d.A = Eigen::MatrixXd::Zero(m, n);
  d.cost = model.objective();
  d.cost.resize(static_cast<std::size_t>(n), 0.0);
  d.lo.resize(static_cast<std::size_t>(n + m));
  d.hi.resize(static_cast<std::size_t>(n + m));
  for (int j = 0; j < n; ++j) {
    const auto& v = model.variables()[static_cast<std::size_t>(j)];
    double lo = v.lower, hi = v.upper;
    if (v.binary) {
      lo = std::max(lo, 0.0);
      hi = std::min(hi, 1.0);
    }
    d.lo[static_cast<std::size_t>(j)] = lo;
    d.hi[static_cast<std::size_t>(j)] = hi;
  }
  for (int i = 0; i < m; ++i) {
    const auto& c = model.constraints()[static_cast<std::size_t>(i)];
    for (const auto& t : c.terms) d.A(i, t.var) += t.coef;
    const auto k = static_cast<std::size_t>(n + i);
    switch (c.relation) {
      case Relation::LessEqual:
        d.lo[k] = -kInfinity;
        d.hi[k] = c.rhs;
        break;
      case Relation::GreaterEqual:
        d.lo[k] = c.rhs;
        d.hi[k] = kInfinity;
        break;
      case Relation::Equal:
        d.lo[k] = c.rhs;
        d.hi[k] = c.rhs;
        break;
    }
  }
  return d;
}

BoundedSimplex::BoundedSimplex(const LpData& data, const LpOptions& options) : opt_(options) {
  rows_ = static_cast<int>(data.A.rows());
  structural_ = static_cast<int>(data.A.cols());
  const int n = structural_;
  const int m = rows_;
  lo_ = data.lo;
  hi_ = data.hi;
  lo_.resize(static_cast<std::size_t>(n + m));
  hi_.resize(static_cast<std::size_t>(n + m));
  x_.assign(static_cast<std::size_t>(n + m), 0.0);
  state_.assign(static_cast<std::size_t>(n + m), State::AtLower);
  for (int j = 0; j < n; ++j) place_nonbasic(j);

  // Rows whose activity at the starting point violates the row bounds get
  // an artificial column; the others start with their activity basic.
  Eigen::VectorXd xs(n);
  for (int j = 0; j < n; ++j) xs[j] = x_[static_cast<std::size_t>(j)];
  const Eigen::VectorXd act = data.A * xs;
  std::vector<int> art_row;
  std::vector<double> art_sign, art_value;
  std::vector<double> diag(static_cast<std::size_t>(m), -1.0);
  head_.assign(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(n + i);
    const double v = act[i];
    if (v >= lo_[k] - opt_.feasibility_tol && v <= hi_[k] + opt_.feasibility_tol) {
      x_[k] = v;
      state_[k] = State::Basic;
      head_[static_cast<std::size_t>(i)] = n + i;
    } else {
      const bool below = v < lo_[k];
      x_[k] = below ? lo_[k] : hi_[k];
      state_[k] = below ? State::AtLower : State::AtUpper;
      art_row.push_back(i);
      art_sign.push_back(below ? 1.0 : -1.0);
      art_value.push_back(std::abs(x_[k] - v));
    }
  }
  artificial_begin_ = n + m;
  cols_ = n + m + static_cast<int>(art_row.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, cols_);
  K.leftCols(n) = data.A;
  K.middleCols(n, m) = -Eigen::MatrixXd::Identity(m, m);
  for (std::size_t a = 0; a < art_row.size(); ++a) {
    const int col = artificial_begin_ + static_cast<int>(a);
    K(art_row[a], col) = art_sign[a];
    diag[static_cast<std::size_t>(art_row[a])] = art_sign[a];
    head_[static_cast<std::size_t>(art_row[a])] = col;
    lo_.push_back(0.0);
    hi_.push_back(kInfinity);
    x_.push_back(art_value[a]);
    state_.push_back(State::Basic);
  }
  K_ = std::make_shared<const Eigen::MatrixXd>(std::move(K));
  T_ = *K_;
  for (int i = 0; i < m; ++i) T_.row(i) /= diag[static_cast<std::size_t>(i)];
  cost_.assign(static_cast<std::size_t>(cols_), 0.0);
  for (int j = 0; j < n; ++j) cost_[static_cast<std::size_t>(j)] = data.cost[static_cast<std::size_t>(j)];
  d_.assign(static_cast<std::size_t>(cols_), 0.0);
}

void BoundedSimplex::place_nonbasic(int j) {
  const auto k = static_cast<std::size_t>(j);
  if (std::isfinite(lo_[k])) {
    state_[k] = State::AtLower;
    x_[k] = lo_[k];
  } else if (std::isfinite(hi_[k])) {
    state_[k] = State::AtUpper;
    x_[k] = hi_[k];
  } else {
    state_[k] = State::Free;
    x_[k] = 0.0;
  }
}

void BoundedSimplex::price(const std::vector<double>& c) {
  c_ = c;
  Eigen::VectorXd cb(rows_);
  for (int i = 0; i < rows_; ++i) cb[i] = c[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])];
  const Eigen::VectorXd r = T_.transpose() * cb;
  for (int j = 0; j < cols_; ++j) {
    d_[static_cast<std::size_t>(j)] =
        state_[static_cast<std::size_t>(j)] == State::Basic ? 0.0 : c[static_cast<std::size_t>(j)] - r[j];
  }
}

void BoundedSimplex::pivot(int r, int q, State leaving, double leaving_value) {
  const auto p = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
  state_[p] = leaving;
  x_[p] = leaving_value;
  const double piv = T_(r, q);
  T_.row(r) /= piv;
  T_(r, q) = 1.0;
  for (int i = 0; i < rows_; ++i) {
    if (i == r) continue;
    const double f = T_(i, q);
    if (f == 0.0) continue;
    T_.row(i) -= f * T_.row(r);
    T_(i, q) = 0.0;
  }
  const double dq = d_[static_cast<std::size_t>(q)];
  if (dq != 0.0) {
    for (int j = 0; j < cols_; ++j) d_[static_cast<std::size_t>(j)] -= dq * T_(r, j);
  }
  d_[static_cast<std::size_t>(q)] = 0.0;
  head_[static_cast<std::size_t>(r)] = q;
  state_[static_cast<std::size_t>(q)] = State::Basic;
  if (++since_refactor_ >= kRefactorEvery) refactor();
}

void BoundedSimplex::refactor() {
  since_refactor_ = 0;
  if (rows_ == 0) return;
  Eigen::MatrixXd B(rows_, rows_);
  for (int i = 0; i < rows_; ++i) B.col(i) = K_->col(head_[static_cast<std::size_t>(i)]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  T_ = lu.solve(*K_);
  if (!T_.allFinite()) throw Error(ErrorCategory::Numeric, "singular simplex basis");
  recompute_basics();
  price(c_);
}

void BoundedSimplex::recompute_basics() {
  // x_B = -sum over nonbasic j of T_j x_j
  Eigen::VectorXd xn = Eigen::VectorXd::Zero(cols_);
  for (int j = 0; j < cols_; ++j) {
    if (state_[static_cast<std::size_t>(j)] != State::Basic) xn[j] = x_[static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXd xb = -(T_ * xn);
  for (int i = 0; i < rows_; ++i) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = xb[i];
}

double BoundedSimplex::infeasibility(int i) const {
  const auto p = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
  if (x_[p] < lo_[p]) return lo_[p] - x_[p];
  if (x_[p] > hi_[p]) return x_[p] - hi_[p];
  return 0.0;
}

SolveStatus BoundedSimplex::primal_loop(const std::vector<double>& c) {
  price(c);
  int degenerate = 0;
  bool bland = false;
  for (;;) {
    if (iterations_ >= opt_.max_iterations) return SolveStatus::IterationLimit;
    int q = -1;
    double best = 0.0;
    double dir = 0.0;
    for (int j = 0; j < cols_; ++j) {
      const auto k = static_cast<std::size_t>(j);
      const State s = state_[k];
      if (s == State::Basic || lo_[k] == hi_[k]) continue;
      const double dj = d_[k];
      double score = 0.0, dj_dir = 0.0;
      if ((s == State::AtLower || s == State::Free) && dj < -opt_.optimality_tol) {
        score = -dj;
        dj_dir = 1.0;
      } else if ((s == State::AtUpper || s == State::Free) && dj > opt_.optimality_tol) {
        score = dj;
        dj_dir = -1.0;
      } else {
        continue;
      }
      if (bland) {
        q = j;
        dir = dj_dir;
        break;
      }
      if (score > best) {
        best = score;
        q = j;
        dir = dj_dir;
      }
    }
    if (q < 0) return SolveStatus::Optimal;

    const auto kq = static_cast<std::size_t>(q);
    double theta = (std::isfinite(lo_[kq]) && std::isfinite(hi_[kq])) ? hi_[kq] - lo_[kq] : kInfinity;
    int r = -1;
    double r_rate = 0.0;
    for (int i = 0; i < rows_; ++i) {
      const double rate = -T_(i, q) * dir;
      const auto p = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
      double lim;
      if (rate > kPivotTol) {
        if (!std::isfinite(hi_[p])) continue;
        lim = std::max(hi_[p] - x_[p], 0.0) / rate;
      } else if (rate < -kPivotTol) {
        if (!std::isfinite(lo_[p])) continue;
        lim = std::max(x_[p] - lo_[p], 0.0) / -rate;
      } else {
        continue;
      }
      const bool better = lim < theta - 1e-12;
      const bool tie = !better && lim <= theta + 1e-12 && r >= 0;
      if (better || (tie && (bland ? head_[static_cast<std::size_t>(i)] < head_[static_cast<std::size_t>(r)]
                                   : std::abs(rate) > std::abs(r_rate)))) {
        theta = lim;
        r = i;
        r_rate = rate;
      }
    }
    if (!std::isfinite(theta)) return SolveStatus::Unbounded;

    if (theta != 0.0) {
      for (int i = 0; i < rows_; ++i) {
        x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= T_(i, q) * dir * theta;
      }
      x_[kq] += dir * theta;
    }
    ++iterations_;
    if (theta < 1e-12) {
      if (++degenerate > kDegenerateBeforeBland) bland = true;
    } else {
      degenerate = 0;
      bland = false;
    }
    if (r < 0) {
      state_[kq] = dir > 0 ? State::AtUpper : State::AtLower;
      x_[kq] = dir > 0 ? hi_[kq] : lo_[kq];
      continue;
    }
    const auto p = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
    const bool to_upper = r_rate > 0;
    pivot(r, q, to_upper ? State::AtUpper : State::AtLower, to_upper ? hi_[p] : lo_[p]);
  }
}

SolveStatus BoundedSimplex::dual_loop() {
  const int bland_after = 5 * (rows_ + cols_);
  int local = 0;
  for (;;) {
    if (iterations_ >= opt_.max_iterations) return SolveStatus::IterationLimit;
    const bool bland = local > bland_after;
    int r = -1;
    double worst = opt_.feasibility_tol;
    for (int i = 0; i < rows_; ++i) {
      const double inf = infeasibility(i);
      if (inf <= opt_.feasibility_tol) continue;
      if (bland) {
        if (r < 0 || head_[static_cast<std::size_t>(i)] < head_[static_cast<std::size_t>(r)]) r = i;
      } else if (inf > worst) {
        worst = inf;
        r = i;
      }
    }
    if (r < 0) return SolveStatus::Optimal;
    const auto p = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
    const bool increase = x_[p] < lo_[p];
    const double target = increase ? lo_[p] : hi_[p];

    int q = -1;
    double best_ratio = kInfinity;
    double best_alpha = 0.0;
    for (int j = 0; j < cols_; ++j) {
      const auto k = static_cast<std::size_t>(j);
      const State s = state_[k];
      if (s == State::Basic || lo_[k] == hi_[k]) continue;
      const double alpha = T_(r, j);
      if (std::abs(alpha) <= kPivotTol) continue;
      // x_p changes by -alpha * theta_j
      bool ok;
      if (s == State::Free) {
        ok = true;
      } else if (s == State::AtLower) {
        ok = increase ? alpha < 0.0 : alpha > 0.0;
      } else {
        ok = increase ? alpha > 0.0 : alpha < 0.0;
      }
      if (!ok) continue;
      const double ratio = std::abs(d_[k]) / std::abs(alpha);
      const bool better = ratio < best_ratio - 1e-12;
      const bool tie = !better && ratio <= best_ratio + 1e-12;
      if (better || (tie && !bland && std::abs(alpha) > std::abs(best_alpha))) {
        best_ratio = ratio;
        best_alpha = alpha;
        q = j;
      }
    }
    if (q < 0) return SolveStatus::Infeasible;

    const double theta = (x_[p] - target) / best_alpha;
    for (int i = 0; i < rows_; ++i) {
      x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= T_(i, q) * theta;
    }
    x_[static_cast<std::size_t>(q)] += theta;
    ++iterations_;
    ++local;
    pivot(r, q, increase ? State::AtLower : State::AtUpper, target);
  }
}

SolveStatus BoundedSimplex::solve() {
  if (cols_ > artificial_begin_) {
    std::vector<double> phase1(static_cast<std::size_t>(cols_), 0.0);
    for (int j = artificial_begin_; j < cols_; ++j) phase1[static_cast<std::size_t>(j)] = 1.0;
    const SolveStatus s = primal_loop(phase1);
    if (s == SolveStatus::IterationLimit) return s;
    double residual = 0.0;
    for (int j = artificial_begin_; j < cols_; ++j) residual += x_[static_cast<std::size_t>(j)];
    if (residual > opt_.feasibility_tol * std::max(1, cols_ - artificial_begin_)) {
      return SolveStatus::Infeasible;
    }
    for (int j = artificial_begin_; j < cols_; ++j) {
      const auto k = static_cast<std::size_t>(j);
      hi_[k] = 0.0;
      if (state_[k] != State::Basic) {
        state_[k] = State::AtLower;
        x_[k] = 0.0;
      }
    }
    // Drive basic artificials out where a structural or slack column allows.
    for (int i = 0; i < rows_; ++i) {
      if (head_[static_cast<std::size_t>(i)] < artificial_begin_) continue;
      int q = -1;
      double best = 1e-7;
      for (int j = 0; j < artificial_begin_; ++j) {
        if (state_[static_cast<std::size_t>(j)] == State::Basic) continue;
        if (std::abs(T_(i, j)) > best) {
          best = std::abs(T_(i, j));
          q = j;
        }
      }
      if (q < 0) continue;
      pivot(i, q, State::AtLower, 0.0);
    }
    refactor();
  }
  return primal_loop(cost_);
}

SolveStatus BoundedSimplex::reoptimize() {
  price(cost_);
  SolveStatus s = dual_loop();
  if (s != SolveStatus::Optimal) return s;
  // Clean up any dual infeasibility left by bound changes or round-off.
  return primal_loop(cost_);
}

void BoundedSimplex::set_bounds(int j, double lo, double hi) {
  const auto k = static_cast<std::size_t>(j);
  lo_[k] = lo;
  hi_[k] = hi;
  if (state_[k] == State::Basic) return;
  const double old = x_[k];
  const double dj = d_[k];
  if (std::isfinite(lo) && (dj >= 0.0 || !std::isfinite(hi))) {
    state_[k] = State::AtLower;
    x_[k] = lo;
  } else if (std::isfinite(hi)) {
    state_[k] = State::AtUpper;
    x_[k] = hi;
  } else {
    state_[k] = State::Free;
    x_[k] = 0.0;
  }
  const double delta = x_[k] - old;
  if (delta == 0.0) return;
  for (int i = 0; i < rows_; ++i) {
    x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= T_(i, j) * delta;
  }
}

double BoundedSimplex::objective() const {
  double v = 0.0;
  for (int j = 0; j < structural_; ++j) v += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
  return v;
}

std::vector<double> BoundedSimplex::primal() const {
  return {x_.begin(), x_.begin() + structural_};
}

std::vector<double> BoundedSimplex::duals() const {
  return {d_.begin() + structural_, d_.begin() + structural_ + rows_};
}

std::vector<double> BoundedSimplex::reduced_costs() const {
  return {d_.begin(), d_.begin() + structural_};
}

}  // namespace stlrisk::detail
