#include "stlrisk/milp.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "simplex.hpp"
#include "stlrisk/error.hpp"

namespace stlrisk {

// ---------------------------------------------------------------------------
// Model

int MilpModel::add_variable(std::string name, double lower, double upper) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw Error(ErrorCategory::Domain, "variable '" + name + "' has inverted bounds");
  }
  variables_.push_back({std::move(name), lower, upper, false});
  objective_.push_back(0.0);
  return num_variables() - 1;
}

int MilpModel::add_binary(std::string name) {
  variables_.push_back({std::move(name), 0.0, 1.0, true});
  objective_.push_back(0.0);
  return num_variables() - 1;
}

int MilpModel::add_constraint(std::string name, std::vector<LinearTerm> terms, Relation relation,
                              double rhs) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_variables()) {
      throw Error(ErrorCategory::Config, "constraint '" + name + "' references an undeclared variable");
    }
  }
  constraints_.push_back({std::move(name), std::move(terms), relation, rhs});
  return num_constraints() - 1;
}

void MilpModel::set_objective(int var, double coef) {
  objective_.at(static_cast<std::size_t>(var)) = coef;
}

void MilpModel::add_objective(int var, double coef) {
  objective_.at(static_cast<std::size_t>(var)) += coef;
}

void MilpModel::set_bounds(int var, double lower, double upper) {
  auto& v = variables_.at(static_cast<std::size_t>(var));
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw Error(ErrorCategory::Domain, "variable '" + v.name + "' has inverted bounds");
  }
  v.lower = lower;
  v.upper = upper;
}

int MilpModel::num_binaries() const {
  return static_cast<int>(std::count_if(variables_.begin(), variables_.end(),
                                        [](const Variable& v) { return v.binary; }));
}

double MilpModel::objective_value(const std::vector<double>& x) const {
  double v = objective_constant_;
  for (std::size_t j = 0; j < objective_.size(); ++j) v += objective_[j] * x.at(j);
  return v;
}

double MilpModel::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    worst = std::max({worst, variables_[j].lower - x.at(j), x.at(j) - variables_[j].upper});
  }
  for (const auto& c : constraints_) {
    double act = 0.0;
    for (const auto& t : c.terms) act += t.coef * x.at(static_cast<std::size_t>(t.var));
    switch (c.relation) {
      case Relation::LessEqual: worst = std::max(worst, act - c.rhs); break;
      case Relation::GreaterEqual: worst = std::max(worst, c.rhs - act); break;
      case Relation::Equal: worst = std::max(worst, std::abs(act - c.rhs)); break;
    }
  }
  return worst;
}

void MilpModel::validate() const {
  for (const auto& v : variables_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
      throw Error(ErrorCategory::Config, "variable '" + v.name + "' has inverted bounds");
    }
    if (v.binary && (v.lower < 0.0 || v.upper > 1.0)) {
      throw Error(ErrorCategory::Config, "binary '" + v.name + "' must lie within [0,1]");
    }
  }
  for (const auto& c : constraints_) {
    if (!std::isfinite(c.rhs)) {
      throw Error(ErrorCategory::Config, "constraint '" + c.name + "' has a non-finite right-hand side");
    }
    for (const auto& t : c.terms) {
      if (t.var < 0 || t.var >= num_variables()) {
        throw Error(ErrorCategory::Config, "constraint '" + c.name + "' references an undeclared variable");
      }
      if (!std::isfinite(t.coef)) {
        throw Error(ErrorCategory::Config, "constraint '" + c.name + "' has a non-finite coefficient");
      }
    }
  }
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// LP and branch and bound

LpSolution solve_lp(const MilpModel& model, const LpOptions& options) {
  model.validate();
  detail::BoundedSimplex lp(detail::lp_data(model), options);
  LpSolution sol;
  sol.status = lp.solve();
  sol.iterations = lp.iterations();
  if (sol.status == SolveStatus::Optimal) {
    sol.x = lp.primal();
    sol.objective = lp.objective() + model.objective_constant();
    sol.duals = lp.duals();
    sol.reduced_costs = lp.reduced_costs();
  }
  return sol;
}

namespace {

using Clock = std::chrono::steady_clock;

int most_fractional(const detail::BoundedSimplex& lp, const std::vector<int>& binaries,
                    double tol) {
  const auto x = lp.primal();
  int best = -1;
  double best_frac = tol;
  for (int j : binaries) {
    const double v = x[static_cast<std::size_t>(j)];
    const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
    if (frac > best_frac) {
      best_frac = frac;
      best = j;
    }
  }
  return best;
}

}  // namespace

MilpSolution solve_milp(const MilpModel& model, const MilpLimits& limits) {
  model.validate();
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  std::vector<int> binaries;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (model.variables()[static_cast<std::size_t>(j)].binary) binaries.push_back(j);
  }

  MilpSolution out;
  detail::BoundedSimplex root(detail::lp_data(model), limits.lp);
  const SolveStatus rs = root.solve();
  out.nodes = 1;
  if (rs != SolveStatus::Optimal) {
    out.status = rs;
    out.seconds = elapsed();
    return out;
  }

  double incumbent = kInfinity;
  bool limit_hit = false;
  std::vector<detail::BoundedSimplex> stack;
  std::optional<detail::BoundedSimplex> current(std::move(root));

  auto accept = [&](const detail::BoundedSimplex& lp) {
    // Fix binaries at their rounded values and re-solve so the continuous
    // part is exactly consistent with them.
    detail::BoundedSimplex fixed = lp;
    const auto x = lp.primal();
    for (int j : binaries) {
      const double v = std::round(x[static_cast<std::size_t>(j)]);
      fixed.set_bounds(j, v, v);
    }
    const detail::BoundedSimplex* use = &lp;
    if (fixed.reoptimize() == SolveStatus::Optimal) use = &fixed;
    const double obj = use->objective();
    if (obj < incumbent) {
      incumbent = obj;
      out.x = use->primal();
      for (int j : binaries) out.x[static_cast<std::size_t>(j)] = std::round(out.x[static_cast<std::size_t>(j)]);
      out.has_incumbent = true;
    }
  };

  while (current) {
    detail::BoundedSimplex& lp = *current;
    if (lp.objective() < incumbent - limits.gap_tol) {
      const int j = most_fractional(lp, binaries, limits.integrality_tol);
      if (j < 0) {
        accept(lp);
      } else {
        std::vector<detail::BoundedSimplex> kids;
        for (int side = 0; side < 2; ++side) {
          detail::BoundedSimplex child = lp;
          if (side == 0) {
            child.set_bounds(j, lp.lower(j), 0.0);
          } else {
            child.set_bounds(j, 1.0, lp.upper(j));
          }
          const SolveStatus s = child.reoptimize();
          ++out.nodes;
          if (s == SolveStatus::IterationLimit) limit_hit = true;
          if (s == SolveStatus::Optimal && child.objective() < incumbent - limits.gap_tol) {
            kids.push_back(std::move(child));
          }
        }
        if (kids.size() == 2 && kids[1].objective() < kids[0].objective()) std::swap(kids[0], kids[1]);
        if (kids.size() == 2) stack.push_back(std::move(kids[1]));
        if (!kids.empty()) {
          current.emplace(std::move(kids[0]));
          if (out.nodes < limits.max_nodes && elapsed() < limits.max_seconds) continue;
          limit_hit = true;
          break;
        }
      }
    }
    current.reset();
    if (out.nodes >= limits.max_nodes || elapsed() >= limits.max_seconds) {
      if (!stack.empty()) limit_hit = true;
      break;
    }
    while (!stack.empty()) {
      detail::BoundedSimplex next = std::move(stack.back());
      stack.pop_back();
      if (next.objective() < incumbent - limits.gap_tol) {
        current.emplace(std::move(next));
        break;
      }
    }
  }

  out.seconds = elapsed();
  if (out.has_incumbent) out.objective = incumbent + model.objective_constant();
  if (limit_hit) {
    out.status = SolveStatus::IterationLimit;
  } else {
    out.status = out.has_incumbent ? SolveStatus::Optimal : SolveStatus::Infeasible;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CPLEX LP text

namespace {

std::string num(double v) {
  if (v == kInfinity) return "+inf";
  if (v == -kInfinity) return "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string lp_name(const std::string& name, const char* prefix, int index) {
  if (name.empty()) return prefix + std::to_string(index);
  std::string s = name;
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) c = '_';
  }
  if (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.' || s[0] == 'e' || s[0] == 'E') {
    s = std::string(prefix) + "_" + s;
  }
  return s;
}

void write_terms(std::ostringstream& os, const std::vector<std::pair<double, std::string>>& terms) {
  for (const auto& [c, v] : terms) {
    os << (std::signbit(c) ? " - " : " + ") << num(std::abs(c)) << ' ' << v;
  }
}

}  // namespace

std::string export_lp(const MilpModel& model) {
  std::vector<std::string> names;
  for (int j = 0; j < model.num_variables(); ++j) {
    names.push_back(lp_name(model.variables()[static_cast<std::size_t>(j)].name, "v", j));
  }
  std::ostringstream os;
  os << "Minimize\n obj:";
  std::vector<std::pair<double, std::string>> obj;
  for (int j = 0; j < model.num_variables(); ++j) {
    obj.emplace_back(model.objective()[static_cast<std::size_t>(j)], names[static_cast<std::size_t>(j)]);
  }
  write_terms(os, obj);
  if (model.objective_constant() != 0.0) {
    const double c = model.objective_constant();
    os << (std::signbit(c) ? " - " : " + ") << num(std::abs(c));
  }
  os << "\nSubject To\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const auto& c = model.constraints()[static_cast<std::size_t>(i)];
    os << ' ' << lp_name(c.name, "c", i) << ':';
    std::vector<std::pair<double, std::string>> row;
    for (const auto& t : c.terms) row.emplace_back(t.coef, names[static_cast<std::size_t>(t.var)]);
    if (row.empty() && !names.empty()) row.emplace_back(0.0, names.front());
    write_terms(os, row);
    os << (c.relation == Relation::LessEqual ? " <= " : c.relation == Relation::GreaterEqual ? " >= " : " = ")
       << num(c.rhs) << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const auto& v = model.variables()[static_cast<std::size_t>(j)];
    const auto& n = names[static_cast<std::size_t>(j)];
    const double dlo = 0.0;
    const double dhi = v.binary ? 1.0 : kInfinity;
    if (v.lower == dlo && v.upper == dhi) continue;
    if (v.lower == -kInfinity && v.upper == kInfinity) {
      os << ' ' << n << " free\n";
    } else if (v.lower == v.upper) {
      os << ' ' << n << " = " << num(v.lower) << '\n';
    } else {
      os << ' ' << num(v.lower) << " <= " << n << " <= " << num(v.upper) << '\n';
    }
  }
  bool any_binary = false;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (!model.variables()[static_cast<std::size_t>(j)].binary) continue;
    if (!any_binary) os << "Binary\n";
    any_binary = true;
    os << ' ' << names[static_cast<std::size_t>(j)] << '\n';
  }
  os << "End\n";
  return os.str();
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::optional<double> as_number(const std::string& tok) {
  const std::string l = lower(tok);
  if (l == "inf" || l == "+inf" || l == "infinity" || l == "+infinity") return kInfinity;
  if (l == "-inf" || l == "-infinity") return -kInfinity;
  double v = 0.0;
  const char* first = tok.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

class LpReader {
 public:
  MilpModel read(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    enum class Sec { None, Obj, Rows, Bounds, Binary, Done } sec = Sec::None;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto p = line.find('\\'); p != std::string::npos) line.erase(p);
      auto toks = split_ws(line);
      if (toks.empty()) continue;
      const std::string head = lower(toks[0]);
      if (toks.size() == 1 && (head == "minimize" || head == "minimise" || head == "min")) {
        sec = Sec::Obj;
        continue;
      }
      if ((head == "subject" && toks.size() == 2 && lower(toks[1]) == "to") || head == "st" ||
          head == "s.t.") {
        sec = Sec::Rows;
        continue;
      }
      if (toks.size() == 1 && head == "bounds") {
        sec = Sec::Bounds;
        continue;
      }
      if (toks.size() == 1 && (head == "binary" || head == "binaries" || head == "bin")) {
        sec = Sec::Binary;
        continue;
      }
      if (toks.size() == 1 && head == "end") {
        sec = Sec::Done;
        continue;
      }
      try {
        switch (sec) {
          case Sec::Obj: objective(toks); break;
          case Sec::Rows: row(toks); break;
          case Sec::Bounds: bound(toks); break;
          case Sec::Binary:
            for (const auto& t : toks) {
              const int j = var(t);
              auto& v = vars_[static_cast<std::size_t>(j)];
              v.binary = true;
              if (!bounded_[static_cast<std::size_t>(j)]) v.upper = 1.0;
            }
            break;
          default: throw Error(ErrorCategory::Parse, "content outside a section");
        }
      } catch (const Error& e) {
        throw Error(ErrorCategory::Parse, "LP line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    MilpModel m;
    for (const auto& v : vars_) {
      const int j = v.binary ? m.add_binary(v.name) : m.add_variable(v.name, v.lower, v.upper);
      if (v.binary) m.set_bounds(j, v.lower, v.upper);
    }
    for (std::size_t j = 0; j < obj_.size(); ++j) m.set_objective(static_cast<int>(j), obj_[j]);
    m.set_objective_constant(constant_);
    for (auto& r : rows_) m.add_constraint(r.name, r.terms, r.relation, r.rhs);
    return m;
  }

 private:
  int var(const std::string& name) {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    const int j = static_cast<int>(vars_.size());
    vars_.push_back({name, 0.0, kInfinity, false});
    bounded_.push_back(false);
    obj_.push_back(0.0);
    index_.emplace(name, j);
    return j;
  }

  // Parses "[+|-] [coef] var ..." from toks[pos..end), stopping at a
  // relation token. A trailing bare number is returned as a constant.
  std::vector<LinearTerm> terms(const std::vector<std::string>& toks, std::size_t& pos,
                                double* constant) {
    std::vector<LinearTerm> out;
    while (pos < toks.size()) {
      const std::string& t = toks[pos];
      if (t == "<=" || t == ">=" || t == "=" || t == "=<" || t == "=>") break;
      double sign = 1.0;
      if (t == "+" || t == "-") {
        sign = t == "-" ? -1.0 : 1.0;
        ++pos;
        if (pos >= toks.size()) throw Error(ErrorCategory::Parse, "dangling sign");
      }
      double coef = 1.0;
      if (auto n = as_number(toks[pos])) {
        coef = *n;
        ++pos;
        const bool ends = pos >= toks.size() || toks[pos] == "+" || toks[pos] == "-" ||
                          toks[pos] == "<=" || toks[pos] == ">=" || toks[pos] == "=";
        if (ends) {
          if (!constant) throw Error(ErrorCategory::Parse, "constant term in a row");
          *constant += sign * coef;
          continue;
        }
      }
      out.push_back({var(toks[pos]), sign * coef});
      ++pos;
    }
    return out;
  }

  void objective(const std::vector<std::string>& toks) {
    std::size_t pos = 0;
    if (!toks.empty() && toks[0].back() == ':') pos = 1;
    for (const auto& t : terms(toks, pos, &constant_)) obj_[static_cast<std::size_t>(t.var)] += t.coef;
  }

  void row(const std::vector<std::string>& toks) {
    std::size_t pos = 0;
    std::string name;
    if (toks[0].back() == ':') {
      name = toks[0].substr(0, toks[0].size() - 1);
      pos = 1;
    }
    auto ts = terms(toks, pos, nullptr);
    if (pos + 2 != toks.size()) throw Error(ErrorCategory::Parse, "malformed constraint");
    const std::string& rel = toks[pos];
    auto rhs = as_number(toks[pos + 1]);
    if (!rhs) throw Error(ErrorCategory::Parse, "malformed right-hand side");
    Relation r = rel == "=" ? Relation::Equal
                 : (rel == "<=" || rel == "=<") ? Relation::LessEqual
                                                : Relation::GreaterEqual;
    // Drop the zero placeholder written for empty rows.
    std::erase_if(ts, [](const LinearTerm& t) { return t.coef == 0.0; });
    rows_.push_back({name, std::move(ts), r, *rhs});
  }

  void bound(const std::vector<std::string>& toks) {
    if (toks.size() == 2 && lower(toks[1]) == "free") {
      set(var(toks[0]), -kInfinity, kInfinity);
      return;
    }
    if (toks.size() == 3) {
      if (auto v = as_number(toks[2])) {
        const int j = var(toks[0]);
        auto& x = vars_[static_cast<std::size_t>(j)];
        if (toks[1] == "=") return set(j, *v, *v);
        if (toks[1] == "<=") return set(j, x.lower, *v);
        if (toks[1] == ">=") return set(j, *v, x.upper);
      } else if (auto w = as_number(toks[0])) {
        const int j = var(toks[2]);
        auto& x = vars_[static_cast<std::size_t>(j)];
        if (toks[1] == "<=") return set(j, *w, x.upper);
        if (toks[1] == ">=") return set(j, x.lower, *w);
      }
    }
    if (toks.size() == 5 && toks[1] == "<=" && toks[3] == "<=") {
      auto lo = as_number(toks[0]);
      auto hi = as_number(toks[4]);
      if (lo && hi) return set(var(toks[2]), *lo, *hi);
    }
    throw Error(ErrorCategory::Parse, "malformed bound");
  }

  void set(int j, double lo, double hi) {
    auto& v = vars_[static_cast<std::size_t>(j)];
    v.lower = lo;
    v.upper = hi;
    bounded_[static_cast<std::size_t>(j)] = true;
  }

  std::vector<Variable> vars_;
  std::vector<bool> bounded_;
  std::vector<double> obj_;
  double constant_ = 0.0;
  std::map<std::string, int> index_;
  std::vector<Constraint> rows_;
};

}  // namespace

MilpModel read_lp(std::string_view text) {
  LpReader r;
  return r.read(text);
}

}  // namespace stlrisk
