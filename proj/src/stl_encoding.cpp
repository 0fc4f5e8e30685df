#include "stlrisk/stl_encoding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "stlrisk/error.hpp"

namespace stlrisk {

double LinearExpr::eval(const std::vector<double>& x) const {
  double v = constant;
  for (const auto& t : terms) v += t.coef * x.at(static_cast<std::size_t>(t.var));
  return v;
}

namespace {

constexpr double kInf = kInfinity;

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// c * [lo, hi] without 0 * inf artifacts.
Interval scale(double c, double lo, double hi) {
  if (c == 0.0) return {0.0, 0.0};
  return c > 0 ? Interval{c * lo, c * hi} : Interval{c * hi, c * lo};
}

const Eigen::VectorXd* per_step(const std::vector<Eigen::VectorXd>& list, int s) {
  if (list.empty()) return nullptr;
  if (list.size() == 1) return &list.front();
  if (s >= static_cast<int>(list.size())) {
    throw Error(ErrorCategory::Horizon, "state box list does not cover step " + std::to_string(s));
  }
  return &list[static_cast<std::size_t>(s)];
}

// Interval propagation; `raw_*` keeps the hull before intersecting with the
// declared box.
void propagate_boxes(const LtvSystem& sys, const std::vector<Eigen::VectorXd>& prefix, int horizon,
                     const Eigen::VectorXd& in_lo, const Eigen::VectorXd& in_hi,
                     const std::vector<Eigen::VectorXd>& lower,
                     const std::vector<Eigen::VectorXd>& upper, std::vector<Eigen::VectorXd>& lo,
                     std::vector<Eigen::VectorXd>& hi, std::vector<Eigen::VectorXd>* raw_lo,
                     std::vector<Eigen::VectorXd>* raw_hi) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const int k = static_cast<int>(prefix.size()) - 1;
  lo.assign(static_cast<std::size_t>(horizon) + 1, Eigen::VectorXd());
  hi.assign(static_cast<std::size_t>(horizon) + 1, Eigen::VectorXd());
  if (raw_lo) raw_lo->assign(lo.size(), Eigen::VectorXd());
  if (raw_hi) raw_hi->assign(hi.size(), Eigen::VectorXd());
  for (int s = 0; s <= std::min(k, horizon); ++s) {
    lo[static_cast<std::size_t>(s)] = prefix[static_cast<std::size_t>(s)];
    hi[static_cast<std::size_t>(s)] = prefix[static_cast<std::size_t>(s)];
    if (raw_lo) (*raw_lo)[static_cast<std::size_t>(s)] = prefix[static_cast<std::size_t>(s)];
    if (raw_hi) (*raw_hi)[static_cast<std::size_t>(s)] = prefix[static_cast<std::size_t>(s)];
  }
  for (int s = k; s < horizon; ++s) {
    const auto& A = sys.A(s);
    const auto& B = sys.B(s);
    const auto& w = sys.w_mean(s);
    const auto& pl = lo[static_cast<std::size_t>(s)];
    const auto& ph = hi[static_cast<std::size_t>(s)];
    Eigen::VectorXd nl(n), nh(n);
    for (int i = 0; i < n; ++i) {
      double l = w[i], h = w[i];
      for (int j = 0; j < n; ++j) {
        const Interval v = scale(A(i, j), pl[j], ph[j]);
        l += v.lo;
        h += v.hi;
      }
      for (int j = 0; j < m; ++j) {
        const Interval v = scale(B(i, j), in_lo[j], in_hi[j]);
        l += v.lo;
        h += v.hi;
      }
      nl[i] = l;
      nh[i] = h;
    }
    if (raw_lo) (*raw_lo)[static_cast<std::size_t>(s) + 1] = nl;
    if (raw_hi) (*raw_hi)[static_cast<std::size_t>(s) + 1] = nh;
    if (const auto* dl = per_step(lower, s + 1)) nl = nl.cwiseMax(*dl);
    if (const auto* dh = per_step(upper, s + 1)) nh = nh.cwiseMin(*dh);
    lo[static_cast<std::size_t>(s) + 1] = nl;
    hi[static_cast<std::size_t>(s) + 1] = nh;
  }
}

enum class Truth { True, False, Unknown };

struct Lit {
  enum Kind { True, False, Var } kind = True;
  int var = -1;

  static Lit yes() { return {True, -1}; }
  static Lit no() { return {False, -1}; }
  static Lit of(int v) { return {Var, v}; }
};

class Encoder {
 public:
  Encoder(const LtvSystem& sys, const std::vector<Eigen::VectorXd>& prefix, int horizon,
          const EncodeOptions& opts, StlEncoding& out)
      : sys_(sys), prefix_(prefix), horizon_(horizon), opts_(opts), out_(out), model_(out.model) {}

  void build(const Formula& f) {
    setup_states();
    if (opts_.simplify) {
      implied(f, 0, Lit::yes());
    } else {
      const Lit r = lit(f, 0);
      if (r.kind == Lit::False) {
        infeasible("root");
      } else if (r.kind == Lit::Var) {
        model_.set_bounds(r.var, 1.0, 1.0);
        out_.root = r.var;
      }
    }
  }

 private:
  struct Key {
    const void* id;
    int t;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<const void*>()(k.id) ^ (std::hash<int>()(k.t) * 0x9e3779b97f4a7c15ULL);
    }
  };
  struct Item {
    const Formula* f;
    int t;
  };

  // ---- states and dynamics ------------------------------------------------

  void setup_states() {
    const int n = sys_.state_dim();
    const int m = sys_.input_dim();
    const int k = static_cast<int>(prefix_.size()) - 1;
    out_.first_free_step = k;
    in_lo_ = opts_.input_lower.size() ? opts_.input_lower : Eigen::VectorXd::Constant(m, -kInf);
    in_hi_ = opts_.input_upper.size() ? opts_.input_upper : Eigen::VectorXd::Constant(m, kInf);
    if (in_lo_.size() != m || in_hi_.size() != m) {
      throw Error(ErrorCategory::Dimension, "input box must have one entry per input");
    }
    if ((in_lo_.array() > in_hi_.array()).any()) {
      throw Error(ErrorCategory::Domain, "input box is empty");
    }
    std::vector<Eigen::VectorXd> raw_lo, raw_hi;
    propagate_boxes(sys_, prefix_, horizon_, in_lo_, in_hi_, opts_.state_lower, opts_.state_upper,
                    box_lo_, box_hi_, &raw_lo, &raw_hi);
    if (opts_.input_lower.size() || !opts_.state_lower.empty() || !opts_.state_upper.empty()) {
      out_.box_lower = box_lo_;
      out_.box_upper = box_hi_;
    }

    // inputs
    out_.input_vars.assign(static_cast<std::size_t>(horizon_), {});
    out_.input_neg_vars.assign(static_cast<std::size_t>(horizon_), {});
    std::vector<int> cols;     // model variable per input column
    std::vector<double> sign;  // +1 or -1 (negative part)
    std::vector<std::pair<int, int>> where;  // (step, channel)
    for (int s = k; s < horizon_; ++s) {
      for (int j = 0; j < m; ++j) {
        const std::string base = std::to_string(s) + "_" + std::to_string(j);
        if (opts_.split_inputs) {
          const int p = model_.add_variable("up_" + base, 0.0, std::max(0.0, in_hi_[j]));
          const int q = model_.add_variable("un_" + base, 0.0, std::max(0.0, -in_lo_[j]));
          out_.input_vars[static_cast<std::size_t>(s)].push_back(p);
          out_.input_neg_vars[static_cast<std::size_t>(s)].push_back(q);
          cols.push_back(p);
          sign.push_back(1.0);
          where.emplace_back(s, j);
          cols.push_back(q);
          sign.push_back(-1.0);
          where.emplace_back(s, j);
        } else {
          const int u = model_.add_variable("u_" + base, in_lo_[j], in_hi_[j]);
          out_.input_vars[static_cast<std::size_t>(s)].push_back(u);
          cols.push_back(u);
          sign.push_back(1.0);
          where.emplace_back(s, j);
        }
      }
    }

    out_.states.assign(static_cast<std::size_t>(horizon_) + 1, std::vector<LinearExpr>(static_cast<std::size_t>(n)));
    if (opts_.condense) {
      for (int s = 0; s <= k; ++s) {
        for (int i = 0; i < n; ++i) out_.states[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)].constant = prefix_[static_cast<std::size_t>(s)][i];
      }
      const int V = static_cast<int>(cols.size());
      Eigen::VectorXd c = prefix_.back();
      Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, V);
      for (int s = k; s < horizon_; ++s) {
        c = sys_.A(s) * c + sys_.w_mean(s);
        C = sys_.A(s) * C;
        for (int v = 0; v < V; ++v) {
          if (where[static_cast<std::size_t>(v)].first != s) continue;
          C.col(v) += sign[static_cast<std::size_t>(v)] * sys_.B(s).col(where[static_cast<std::size_t>(v)].second);
        }
        auto& xs = out_.states[static_cast<std::size_t>(s) + 1];
        for (int i = 0; i < n; ++i) {
          xs[static_cast<std::size_t>(i)].constant = c[i];
          for (int v = 0; v < V; ++v) {
            if (C(i, v) != 0.0) xs[static_cast<std::size_t>(i)].terms.push_back({cols[static_cast<std::size_t>(v)], C(i, v)});
          }
        }
        // Declared box rows where the input box alone does not imply them.
        const auto* dl = per_step(opts_.state_lower, s + 1);
        const auto* dh = per_step(opts_.state_upper, s + 1);
        for (int i = 0; i < n; ++i) {
          const auto& e = xs[static_cast<std::size_t>(i)];
          const std::string nm = std::to_string(s + 1) + "_" + std::to_string(i);
          if (dl && std::isfinite((*dl)[i]) && raw_lo[static_cast<std::size_t>(s) + 1][i] < (*dl)[i]) {
            add_row("xlo_" + nm, e, Relation::GreaterEqual, (*dl)[i]);
          }
          if (dh && std::isfinite((*dh)[i]) && raw_hi[static_cast<std::size_t>(s) + 1][i] > (*dh)[i]) {
            add_row("xhi_" + nm, e, Relation::LessEqual, (*dh)[i]);
          }
        }
      }
    } else {
      std::vector<std::vector<int>> xv(static_cast<std::size_t>(horizon_) + 1);
      for (int s = 0; s <= horizon_; ++s) {
        for (int i = 0; i < n; ++i) {
          double l, h;
          if (s <= k) {
            l = h = prefix_[static_cast<std::size_t>(s)][i];
          } else {
            l = box_lo_[static_cast<std::size_t>(s)][i];
            h = box_hi_[static_cast<std::size_t>(s)][i];
            if (l > h) {
              // Declared box unreachable: keep the model well formed and
              // let the solver report infeasibility.
              infeasible("box_" + std::to_string(s) + "_" + std::to_string(i));
              h = l;
            }
          }
          const int v = model_.add_variable("x_" + std::to_string(s) + "_" + std::to_string(i), l, h);
          xv[static_cast<std::size_t>(s)].push_back(v);
          out_.states[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)].terms.push_back({v, 1.0});
        }
      }
      for (int s = k; s < horizon_; ++s) {
        const auto& A = sys_.A(s);
        const auto& B = sys_.B(s);
        for (int i = 0; i < n; ++i) {
          std::vector<LinearTerm> row{{xv[static_cast<std::size_t>(s) + 1][static_cast<std::size_t>(i)], 1.0}};
          for (int j = 0; j < n; ++j) {
            if (A(i, j) != 0.0) row.push_back({xv[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)], -A(i, j)});
          }
          for (int j = 0; j < m; ++j) {
            if (B(i, j) == 0.0) continue;
            row.push_back({out_.input_vars[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)], -B(i, j)});
            if (opts_.split_inputs) {
              row.push_back({out_.input_neg_vars[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)], B(i, j)});
            }
          }
          model_.add_constraint("dyn_" + std::to_string(s) + "_" + std::to_string(i), std::move(row),
                                Relation::Equal, sys_.w_mean(s)[i]);
        }
      }
    }
  }

  void add_row(std::string name, const LinearExpr& e, Relation rel, double rhs) {
    model_.add_constraint(std::move(name), e.terms, rel, rhs - e.constant);
  }

  void infeasible(const std::string& why) {
    model_.add_constraint("infeasible_" + why, {}, Relation::GreaterEqual, 1.0);
  }

  int new_binary() { return model_.add_binary("z_" + std::to_string(binaries_++)); }

  // ---- atoms ----------------------------------------------------------------

  // Signed atom expression e: the atom holds iff e >= 0, and e <= -eps is
  // its strict complement.
  LinearExpr atom_expr(const Formula& f, int t) const {
    const auto& p = f.predicate();
    const auto& xs = out_.states[static_cast<std::size_t>(t)];
    if (p.a().size() > static_cast<Eigen::Index>(xs.size())) {
      throw Error(ErrorCategory::Dimension, "predicate longer than the state dimension");
    }
    const double sgn = f.kind() == NodeKind::Atom ? 1.0 : -1.0;
    std::map<int, double> acc;
    LinearExpr e;
    e.constant = p.b() - p.margin(t);
    for (Eigen::Index i = 0; i < p.a().size(); ++i) {
      const double a = p.a()[i];
      if (a == 0.0) continue;
      const auto& x = xs[static_cast<std::size_t>(i)];
      e.constant += a * x.constant;
      for (const auto& term : x.terms) acc[term.var] += a * term.coef;
    }
    for (const auto& [v, c] : acc) {
      if (c != 0.0) e.terms.push_back({v, sgn * c});
    }
    e.constant *= sgn;
    if (sgn < 0) e.constant -= opts_.strict_eps;
    return e;
  }

  Interval atom_range(const Formula& f, int t) const {
    const auto& p = f.predicate();
    const auto& lo = box_lo_[static_cast<std::size_t>(t)];
    const auto& hi = box_hi_[static_cast<std::size_t>(t)];
    Interval r{p.b() - p.margin(t), p.b() - p.margin(t)};
    for (Eigen::Index i = 0; i < p.a().size(); ++i) {
      const Interval v = scale(p.a()[i], lo[i], hi[i]);
      r.lo += v.lo;
      r.hi += v.hi;
    }
    if (f.kind() == NodeKind::NegAtom) r = {-r.hi - opts_.strict_eps, -r.lo - opts_.strict_eps};
    return r;
  }

  Truth atom_truth(const Formula& f, int t) const {
    const Interval r = atom_range(f, t);
    const double tol = t <= out_.first_free_step ? opts_.known_tol : 0.0;
    if (r.lo >= -tol) return Truth::True;
    if (r.hi < 0.0) return Truth::False;
    return Truth::Unknown;
  }

  // e >= 0 when z = 1, with e >= -M1 otherwise
  void atom_implied(const Formula& f, int t, Lit z) {
    const LinearExpr e = atom_expr(f, t);
    const std::string name = "atom_" + std::to_string(rows_++);
    if (z.kind == Lit::True) {
      add_row(name, e, Relation::GreaterEqual, 0.0);
      return;
    }
    const Interval r = atom_range(f, t);
    const double m1 = std::isfinite(r.lo) ? std::max(0.0, -r.lo) : opts_.big_m;
    LinearExpr row = e;
    row.terms.push_back({z.var, -m1});
    add_row(name, row, Relation::GreaterEqual, -m1);
  }

  // ---- literal (two-sided) mode --------------------------------------------

  Lit lit(const Formula& f, int t) {
    const Key key{f.id(), t};
    if (auto it = lits_.find(key); it != lits_.end()) return it->second;
    Lit out;
    switch (f.kind()) {
      case NodeKind::True: out = Lit::yes(); break;
      case NodeKind::False: out = Lit::no(); break;
      case NodeKind::Atom:
      case NodeKind::NegAtom: {
        const int z = new_binary();
        atom_implied(f, t, Lit::of(z));
        const Interval r = atom_range(f, t);
        const double m2 = (std::isfinite(r.hi) ? std::max(0.0, r.hi) : opts_.big_m) + opts_.strict_eps;
        LinearExpr row = atom_expr(f, t);
        row.terms.push_back({z, -m2});
        add_row("atomc_" + std::to_string(rows_++), row, Relation::LessEqual, -opts_.strict_eps);
        out = Lit::of(z);
        break;
      }
      case NodeKind::And:
      case NodeKind::Or: {
        std::vector<Lit> ls;
        for (const auto& c : f.children()) ls.push_back(lit(c, t));
        out = f.kind() == NodeKind::And ? and_of(std::move(ls)) : or_of(std::move(ls));
        break;
      }
      case NodeKind::Until:
      case NodeKind::Release: {
        const bool until = f.kind() == NodeKind::Until;
        std::vector<Lit> anchors;
        for (int i = f.lo(); i <= f.hi(); ++i) {
          std::vector<Lit> ls{lit(f.right(), t + i)};
          for (int j = 0; j <= i; ++j) ls.push_back(lit(f.left(), t + j));
          anchors.push_back(until ? and_of(std::move(ls)) : or_of(std::move(ls)));
        }
        out = until ? or_of(std::move(anchors)) : and_of(std::move(anchors));
        break;
      }
      case NodeKind::Not: throw Error(ErrorCategory::Domain, "encoding requires negation normal form");
    }
    lits_.emplace(key, out);
    return out;
  }

  Lit and_of(std::vector<Lit> ls) {
    std::vector<int> vars;
    for (const auto& l : ls) {
      if (l.kind == Lit::False) return Lit::no();
      if (l.kind == Lit::Var) vars.push_back(l.var);
    }
    if (vars.empty()) return Lit::yes();
    if (vars.size() == 1) return Lit::of(vars.front());
    const int z = new_binary();
    const std::string base = "and_" + std::to_string(rows_++);
    std::vector<LinearTerm> lower{{z, 1.0}};
    for (std::size_t i = 0; i < vars.size(); ++i) {
      model_.add_constraint(base + "_" + std::to_string(i), {{z, 1.0}, {vars[i], -1.0}},
                            Relation::LessEqual, 0.0);
      lower.push_back({vars[i], -1.0});
    }
    model_.add_constraint(base + "_all", std::move(lower), Relation::GreaterEqual,
                          -static_cast<double>(vars.size() - 1));
    return Lit::of(z);
  }

  Lit or_of(std::vector<Lit> ls) {
    std::vector<int> vars;
    for (const auto& l : ls) {
      if (l.kind == Lit::True) return Lit::yes();
      if (l.kind == Lit::Var) vars.push_back(l.var);
    }
    if (vars.empty()) return Lit::no();
    if (vars.size() == 1) return Lit::of(vars.front());
    const int z = new_binary();
    std::vector<LinearTerm> row{{z, 1.0}};
    for (int v : vars) row.push_back({v, -1.0});
    model_.add_constraint("or_" + std::to_string(rows_++), std::move(row), Relation::LessEqual, 0.0);
    return Lit::of(z);
  }

  // ---- polarity-aware mode ----------------------------------------------------

  Truth truth(const Formula& f, int t) {
    const Key key{f.id(), t};
    if (auto it = truths_.find(key); it != truths_.end()) return it->second;
    Truth out = Truth::Unknown;
    switch (f.kind()) {
      case NodeKind::True: out = Truth::True; break;
      case NodeKind::False: out = Truth::False; break;
      case NodeKind::Atom:
      case NodeKind::NegAtom: out = atom_truth(f, t); break;
      case NodeKind::And:
      case NodeKind::Or: {
        std::vector<Item> items;
        for (const auto& c : f.children()) items.push_back({&c, t});
        out = f.kind() == NodeKind::And ? all_of(items) : any_of(items);
        break;
      }
      case NodeKind::Until: {
        bool unknown = false;
        out = Truth::False;
        for (const auto& anchor : anchors(f, t)) {
          const Truth a = all_of(anchor);
          if (a == Truth::True) {
            out = Truth::True;
            unknown = false;
            break;
          }
          if (a == Truth::Unknown) unknown = true;
        }
        if (unknown) out = Truth::Unknown;
        break;
      }
      case NodeKind::Release: {
        bool unknown = false;
        out = Truth::True;
        for (const auto& anchor : anchors(f, t)) {
          const Truth a = any_of(anchor);
          if (a == Truth::False) {
            out = Truth::False;
            unknown = false;
            break;
          }
          if (a == Truth::Unknown) unknown = true;
        }
        if (unknown) out = Truth::Unknown;
        break;
      }
      case NodeKind::Not: throw Error(ErrorCategory::Domain, "encoding requires negation normal form");
    }
    truths_.emplace(key, out);
    return out;
  }

  Truth all_of(const std::vector<Item>& items) {
    bool unknown = false;
    for (const auto& it : items) {
      const Truth v = truth(*it.f, it.t);
      if (v == Truth::False) return Truth::False;
      if (v == Truth::Unknown) unknown = true;
    }
    return unknown ? Truth::Unknown : Truth::True;
  }

  Truth any_of(const std::vector<Item>& items) {
    bool unknown = false;
    for (const auto& it : items) {
      const Truth v = truth(*it.f, it.t);
      if (v == Truth::True) return Truth::True;
      if (v == Truth::Unknown) unknown = true;
    }
    return unknown ? Truth::Unknown : Truth::False;
  }

  // Item lists per anchor i in [a,b]: right at t+i, left at t..t+i.
  static std::vector<std::vector<Item>> anchors(const Formula& f, int t) {
    std::vector<std::vector<Item>> out;
    for (int i = f.lo(); i <= f.hi(); ++i) {
      std::vector<Item> items{{&f.right(), t + i}};
      for (int j = 0; j <= i; ++j) items.push_back({&f.left(), t + j});
      out.push_back(std::move(items));
    }
    return out;
  }

  void forbid(Lit z) {
    if (z.kind == Lit::Var) {
      model_.set_bounds(z.var, 0.0, 0.0);
    } else if (z.kind == Lit::True) {
      infeasible(std::to_string(rows_++));
    }
  }

  // Adds rows so that z = 1 implies (x_bar, t) |= f.
  void implied(const Formula& f, int t, Lit z) {
    switch (truth(f, t)) {
      case Truth::True: return;
      case Truth::False: forbid(z); return;
      case Truth::Unknown: break;
    }
    switch (f.kind()) {
      case NodeKind::Atom:
      case NodeKind::NegAtom: atom_implied(f, t, z); return;
      case NodeKind::And:
        for (const auto& c : f.children()) implied(c, t, z);
        return;
      case NodeKind::Or: {
        std::vector<Item> items;
        for (const auto& c : f.children()) items.push_back({&c, t});
        implied_any(items, z);
        return;
      }
      case NodeKind::Until: implied_any_of_all(anchors(f, t), z); return;
      case NodeKind::Release:
        for (const auto& anchor : anchors(f, t)) implied_any(anchor, z);
        return;
      default: return;
    }
  }

  void implied_any(const std::vector<Item>& items, Lit z) {
    std::vector<Item> open;
    for (const auto& it : items) {
      const Truth v = truth(*it.f, it.t);
      if (v == Truth::True) return;
      if (v == Truth::Unknown) open.push_back(it);
    }
    if (open.empty()) return forbid(z);
    if (open.size() == 1) return implied(*open.front().f, open.front().t, z);
    std::vector<int> ys;
    for (const auto& it : open) ys.push_back(indicator(*it.f, it.t));
    cover(ys, z);
  }

  void implied_any_of_all(const std::vector<std::vector<Item>>& groups, Lit z) {
    std::vector<std::vector<Item>> open;
    for (const auto& g : groups) {
      const Truth v = all_of(g);
      if (v == Truth::True) return;
      if (v == Truth::False) continue;
      std::vector<Item> rest;
      for (const auto& it : g) {
        if (truth(*it.f, it.t) != Truth::True) rest.push_back(it);
      }
      open.push_back(std::move(rest));
    }
    if (open.empty()) return forbid(z);
    if (open.size() == 1) {
      for (const auto& it : open.front()) implied(*it.f, it.t, z);
      return;
    }
    std::vector<int> ys;
    for (const auto& g : open) {
      if (g.size() == 1) {
        ys.push_back(indicator(*g.front().f, g.front().t));
        continue;
      }
      const int y = new_binary();
      for (const auto& it : g) implied(*it.f, it.t, Lit::of(y));
      ys.push_back(y);
    }
    cover(ys, z);
  }

  // sum ys >= z
  void cover(const std::vector<int>& ys, Lit z) {
    std::vector<LinearTerm> row;
    for (int y : ys) row.push_back({y, 1.0});
    double rhs = 1.0;
    if (z.kind == Lit::Var) {
      row.push_back({z.var, -1.0});
      rhs = 0.0;
    }
    model_.add_constraint("any_" + std::to_string(rows_++), std::move(row), Relation::GreaterEqual, rhs);
  }

  int indicator(const Formula& f, int t) {
    const Key key{f.id(), t};
    if (auto it = indicators_.find(key); it != indicators_.end()) return it->second;
    const int z = new_binary();
    implied(f, t, Lit::of(z));
    indicators_.emplace(key, z);
    return z;
  }

  const LtvSystem& sys_;
  const std::vector<Eigen::VectorXd>& prefix_;
  int horizon_;
  const EncodeOptions& opts_;
  StlEncoding& out_;
  MilpModel& model_;
  Eigen::VectorXd in_lo_, in_hi_;
  std::vector<Eigen::VectorXd> box_lo_, box_hi_;
  std::unordered_map<Key, Lit, KeyHash> lits_;
  std::unordered_map<Key, Truth, KeyHash> truths_;
  std::unordered_map<Key, int, KeyHash> indicators_;
  int binaries_ = 0;
  int rows_ = 0;
};

}  // namespace

void reachable_boxes(const LtvSystem& sys, const std::vector<Eigen::VectorXd>& prefix, int horizon,
                     const Eigen::VectorXd& input_lower, const Eigen::VectorXd& input_upper,
                     const std::vector<Eigen::VectorXd>& lower,
                     const std::vector<Eigen::VectorXd>& upper,
                     std::vector<Eigen::VectorXd>& box_lower,
                     std::vector<Eigen::VectorXd>& box_upper) {
  if (prefix.empty()) throw Error(ErrorCategory::Domain, "need at least the current state");
  if (input_lower.size() != sys.input_dim() || input_upper.size() != sys.input_dim()) {
    throw Error(ErrorCategory::Dimension, "input box must have one entry per input");
  }
  propagate_boxes(sys, prefix, horizon, input_lower, input_upper, lower, upper, box_lower,
                  box_upper, nullptr, nullptr);
}

StlEncoding encode_deterministic_stl(const Formula& f, const LtvSystem& sys,
                                     const std::vector<Eigen::VectorXd>& prefix, int horizon,
                                     const EncodeOptions& options) {
  if (prefix.empty()) throw Error(ErrorCategory::Domain, "need at least the current state");
  if (!(options.big_m > 0.0)) throw Error(ErrorCategory::Domain, "big-M must be positive");
  if (!(options.strict_eps > 0.0)) throw Error(ErrorCategory::Domain, "strict epsilon must be positive");
  for (const auto& x : prefix) {
    if (x.size() != sys.state_dim()) {
      throw Error(ErrorCategory::Dimension, "known state has the wrong dimension");
    }
  }
  if (horizon < 0 || static_cast<int>(prefix.size()) - 1 > horizon) {
    throw Error(ErrorCategory::Horizon, "known prefix extends beyond the encoding horizon");
  }
  if (stlrisk::horizon(f) > horizon) {
    throw Error(ErrorCategory::Horizon, "formula horizon " + std::to_string(stlrisk::horizon(f)) +
                                            " exceeds the encoding horizon " + std::to_string(horizon));
  }
  if (!f.is_nnf()) throw Error(ErrorCategory::Domain, "encoding requires negation normal form");
  StlEncoding out;
  Encoder enc(sys, prefix, horizon, options, out);
  enc.build(f);
  return out;
}

std::vector<Eigen::VectorXd> extract_states(const StlEncoding& enc, const std::vector<double>& x) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& step : enc.states) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(step.size()));
    for (std::size_t i = 0; i < step.size(); ++i) v[static_cast<Eigen::Index>(i)] = step[i].eval(x);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<Eigen::VectorXd> extract_inputs(const StlEncoding& enc, const std::vector<double>& x) {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t s = static_cast<std::size_t>(enc.first_free_step); s < enc.input_vars.size(); ++s) {
    const auto& pos = enc.input_vars[s];
    Eigen::VectorXd u(static_cast<Eigen::Index>(pos.size()));
    for (std::size_t j = 0; j < pos.size(); ++j) {
      double v = x.at(static_cast<std::size_t>(pos[j]));
      if (!enc.input_neg_vars[s].empty()) v -= x.at(static_cast<std::size_t>(enc.input_neg_vars[s][j]));
      u[static_cast<Eigen::Index>(j)] = v;
    }
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace stlrisk
