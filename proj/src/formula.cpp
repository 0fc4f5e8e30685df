#include "stlrisk/formula.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>

#include "stlrisk/error.hpp"

namespace stlrisk {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Horizon: return "horizon";
    case ErrorCategory::Dimension: return "dimension";
    case ErrorCategory::Domain: return "domain";
    case ErrorCategory::Infeasible: return "infeasible";
    case ErrorCategory::Numeric: return "numeric";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// AffinePredicate

AffinePredicate::AffinePredicate(Eigen::VectorXd a, double b, std::string name)
    : a_(std::move(a)), b_(b), name_(std::move(name)) {
  if (a_.size() == 0 || (a_.array() == 0.0).all()) {
    throw Error(ErrorCategory::Domain, "affine predicate needs a nonzero coefficient");
  }
  if (!a_.allFinite() || !std::isfinite(b_)) {
    throw Error(ErrorCategory::Domain, "affine predicate coefficients must be finite");
  }
}

double AffinePredicate::margin(int t) const {
  if (!margins_) return 0.0;
  if (t < 0 || t >= static_cast<int>(margins_->size())) {
    throw Error(ErrorCategory::Horizon,
                "no tightening margin for step " + std::to_string(t) + " of predicate '" + name_ +
                    "'");
  }
  return (*margins_)[static_cast<std::size_t>(t)];
}

std::span<const double> AffinePredicate::margins() const {
  if (!margins_) return {};
  return {margins_->data(), margins_->size()};
}

double AffinePredicate::affine(const Eigen::VectorXd& x) const {
  if (x.size() < a_.size()) {
    throw Error(ErrorCategory::Dimension, "predicate has " + std::to_string(a_.size()) +
                                              " coefficients but the state has dimension " +
                                              std::to_string(x.size()));
  }
  return a_.dot(x.head(a_.size())) + b_;
}

double AffinePredicate::value(const Eigen::VectorXd& x, int t) const {
  return affine(x) - margin(t);
}

AffinePredicate AffinePredicate::negated() const {
  AffinePredicate p(-a_, -b_, name_);
  return p;
}

AffinePredicate AffinePredicate::with_margins(std::vector<double> schedule) const {
  AffinePredicate p = *this;
  p.margins_ = std::make_shared<const std::vector<double>>(std::move(schedule));
  return p;
}

AffinePredicate AffinePredicate::renamed(std::string name) const {
  AffinePredicate p = *this;
  p.name_ = std::move(name);
  return p;
}

bool operator==(const AffinePredicate& lhs, const AffinePredicate& rhs) {
  if (lhs.b_ != rhs.b_ || lhs.name_ != rhs.name_) return false;
  const Eigen::Index n = std::max(lhs.a_.size(), rhs.a_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double l = i < lhs.a_.size() ? lhs.a_[i] : 0.0;
    const double r = i < rhs.a_.size() ? rhs.a_[i] : 0.0;
    if (l != r) return false;
  }
  if (static_cast<bool>(lhs.margins_) != static_cast<bool>(rhs.margins_)) return false;
  return !lhs.margins_ || *lhs.margins_ == *rhs.margins_;
}

// ---------------------------------------------------------------------------
// Formula

struct Formula::Node {
  NodeKind kind = NodeKind::True;
  AffinePredicate pred;
  std::vector<Formula> children;
  int a = 0;
  int b = 0;
};

namespace {

void check_interval(int a, int b) {
  if (a < 0 || b < 0) {
    throw Error(ErrorCategory::Domain, "temporal interval bounds must be nonnegative");
  }
  if (a > b) {
    throw Error(ErrorCategory::Domain,
                "empty temporal interval [" + std::to_string(a) + "," + std::to_string(b) + "]");
  }
}

}  // namespace

Formula Formula::top() {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::True;
  return Formula(std::move(n));
}

Formula Formula::bottom() {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::False;
  return Formula(std::move(n));
}

Formula Formula::atom(AffinePredicate pred) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Atom;
  n->pred = std::move(pred);
  return Formula(std::move(n));
}

Formula Formula::neg_atom(AffinePredicate pred) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::NegAtom;
  n->pred = std::move(pred);
  return Formula(std::move(n));
}

Formula Formula::negation(Formula f) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Not;
  n->children.push_back(std::move(f));
  return Formula(std::move(n));
}

Formula Formula::conjunction(std::vector<Formula> children) {
  if (children.empty()) return top();
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::And;
  n->children = std::move(children);
  return Formula(std::move(n));
}

Formula Formula::disjunction(std::vector<Formula> children) {
  if (children.empty()) return bottom();
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Or;
  n->children = std::move(children);
  return Formula(std::move(n));
}

Formula Formula::until(int a, int b, Formula left, Formula right) {
  check_interval(a, b);
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Until;
  n->a = a;
  n->b = b;
  n->children = {std::move(left), std::move(right)};
  return Formula(std::move(n));
}

Formula Formula::release(int a, int b, Formula left, Formula right) {
  check_interval(a, b);
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Release;
  n->a = a;
  n->b = b;
  n->children = {std::move(left), std::move(right)};
  return Formula(std::move(n));
}

Formula Formula::eventually(int a, int b, Formula f) { return until(a, b, top(), std::move(f)); }

Formula Formula::always(int a, int b, Formula f) { return release(a, b, bottom(), std::move(f)); }

NodeKind Formula::kind() const { return node_->kind; }

const AffinePredicate& Formula::predicate() const {
  if (node_->kind != NodeKind::Atom && node_->kind != NodeKind::NegAtom) {
    throw Error(ErrorCategory::Domain, "formula node is not an atom");
  }
  return node_->pred;
}

const std::vector<Formula>& Formula::children() const { return node_->children; }

const Formula& Formula::left() const {
  if (node_->kind != NodeKind::Until && node_->kind != NodeKind::Release) {
    throw Error(ErrorCategory::Domain, "formula node is not temporal");
  }
  return node_->children[0];
}

const Formula& Formula::right() const {
  if (node_->kind != NodeKind::Until && node_->kind != NodeKind::Release) {
    throw Error(ErrorCategory::Domain, "formula node is not temporal");
  }
  return node_->children[1];
}

int Formula::lo() const { return node_->a; }
int Formula::hi() const { return node_->b; }

bool Formula::is_nnf() const {
  if (node_->kind == NodeKind::Not) return false;
  return std::all_of(node_->children.begin(), node_->children.end(),
                     [](const Formula& c) { return c.is_nnf(); });
}

bool operator==(const Formula& lhs, const Formula& rhs) {
  if (lhs.node_ == rhs.node_) return true;
  const auto& l = *lhs.node_;
  const auto& r = *rhs.node_;
  if (l.kind != r.kind || l.a != r.a || l.b != r.b) return false;
  if (l.kind == NodeKind::Atom || l.kind == NodeKind::NegAtom) return l.pred == r.pred;
  return l.children == r.children;
}

// ---------------------------------------------------------------------------
// NNF, horizon, constant simplification

namespace {

Formula nnf(const Formula& f, bool negate) {
  switch (f.kind()) {
    case NodeKind::True: return negate ? Formula::bottom() : f;
    case NodeKind::False: return negate ? Formula::top() : f;
    case NodeKind::Atom: return negate ? Formula::neg_atom(f.predicate()) : f;
    case NodeKind::NegAtom: return negate ? Formula::atom(f.predicate()) : f;
    case NodeKind::Not: return nnf(f.children()[0], !negate);
    case NodeKind::And:
    case NodeKind::Or: {
      std::vector<Formula> cs;
      cs.reserve(f.children().size());
      for (const auto& c : f.children()) cs.push_back(nnf(c, negate));
      const bool conj = (f.kind() == NodeKind::And) != negate;
      return conj ? Formula::conjunction(std::move(cs)) : Formula::disjunction(std::move(cs));
    }
    case NodeKind::Until:
    case NodeKind::Release: {
      Formula l = nnf(f.left(), negate);
      Formula r = nnf(f.right(), negate);
      const bool until = (f.kind() == NodeKind::Until) != negate;
      return until ? Formula::until(f.lo(), f.hi(), std::move(l), std::move(r))
                   : Formula::release(f.lo(), f.hi(), std::move(l), std::move(r));
    }
  }
  return f;
}

}  // namespace

Formula to_nnf(const Formula& f) { return nnf(f, false); }

int horizon(const Formula& f) {
  switch (f.kind()) {
    case NodeKind::True:
    case NodeKind::False:
    case NodeKind::Atom:
    case NodeKind::NegAtom: return 0;
    case NodeKind::Not: return horizon(f.children()[0]);
    case NodeKind::And:
    case NodeKind::Or: {
      int h = 0;
      for (const auto& c : f.children()) h = std::max(h, horizon(c));
      return h;
    }
    case NodeKind::Until:
    case NodeKind::Release: return f.hi() + std::max(horizon(f.left()), horizon(f.right()));
  }
  return 0;
}

Formula simplify_constants(const Formula& f) {
  switch (f.kind()) {
    case NodeKind::And:
    case NodeKind::Or: {
      const bool conj = f.kind() == NodeKind::And;
      const NodeKind neutral = conj ? NodeKind::True : NodeKind::False;
      const NodeKind absorbing = conj ? NodeKind::False : NodeKind::True;
      std::vector<Formula> cs;
      for (const auto& c : f.children()) {
        Formula s = simplify_constants(c);
        if (s.kind() == absorbing) return s;
        if (s.kind() != neutral) cs.push_back(std::move(s));
      }
      if (cs.size() == 1) return cs.front();
      return conj ? Formula::conjunction(std::move(cs)) : Formula::disjunction(std::move(cs));
    }
    case NodeKind::Until: {
      Formula r = simplify_constants(f.right());
      if (r.kind() == NodeKind::False) return r;
      return Formula::until(f.lo(), f.hi(), simplify_constants(f.left()), std::move(r));
    }
    case NodeKind::Release: {
      Formula r = simplify_constants(f.right());
      if (r.kind() == NodeKind::True) return r;
      return Formula::release(f.lo(), f.hi(), simplify_constants(f.left()), std::move(r));
    }
    case NodeKind::Not: return Formula::negation(simplify_constants(f.children()[0]));
    default: return f;
  }
}

std::pair<int, int> seconds_to_steps(double a, double b, double period) {
  if (!(period > 0.0)) throw Error(ErrorCategory::Domain, "time step period must be positive");
  constexpr double kSlack = 1e-9;
  const int lo = static_cast<int>(std::floor(a / period + kSlack));
  const int hi = static_cast<int>(std::ceil(b / period - kSlack));
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Printer

namespace {

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print_into(const Formula& f, std::string& out);

void print_nary(const Formula& f, std::string_view op, std::string& out) {
  out += '(';
  bool first = true;
  for (const auto& c : f.children()) {
    if (!first) {
      out += ' ';
      out += op;
      out += ' ';
    }
    first = false;
    print_into(c, out);
  }
  out += ')';
}

void print_interval(const Formula& f, std::string& out) {
  out += '[';
  out += std::to_string(f.lo());
  out += ',';
  out += std::to_string(f.hi());
  out += ']';
}

void print_into(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case NodeKind::True: out += "top"; return;
    case NodeKind::False: out += "bot"; return;
    case NodeKind::Atom: out += print(f.predicate()); return;
    case NodeKind::NegAtom:
      out += "not ";
      out += print(f.predicate());
      return;
    case NodeKind::Not:
      out += "not ";
      print_into(f.children()[0], out);
      return;
    case NodeKind::And: print_nary(f, "and", out); return;
    case NodeKind::Or: print_nary(f, "or", out); return;
    case NodeKind::Until:
      if (f.left().kind() == NodeKind::True) {
        out += 'F';
        print_interval(f, out);
        out += ' ';
        print_into(f.right(), out);
        return;
      }
      out += '(';
      print_into(f.left(), out);
      out += " U";
      print_interval(f, out);
      out += ' ';
      print_into(f.right(), out);
      out += ')';
      return;
    case NodeKind::Release:
      if (f.left().kind() == NodeKind::False) {
        out += 'G';
        print_interval(f, out);
        out += ' ';
        print_into(f.right(), out);
        return;
      }
      out += '(';
      print_into(f.left(), out);
      out += " R";
      print_interval(f, out);
      out += ' ';
      print_into(f.right(), out);
      out += ')';
      return;
  }
}

}  // namespace

std::string print(const AffinePredicate& p) {
  std::string out;
  if (!p.name().empty()) {
    out += p.name();
    out += ':';
  }
  if (p.has_margins()) out += '~';
  out += '(';
  for (Eigen::Index i = 0; i < p.a().size(); ++i) {
    if (p.a()[i] == 0.0) continue;
    out += number(p.a()[i]);
    out += "*x";
    out += std::to_string(i);
    out += " + ";
  }
  out += number(p.b());
  out += " >= 0)";
  return out;
}

std::string print(const Formula& f) {
  std::string out;
  print_into(f, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, Number, LParen, RParen, LBrack, RBrack, Comma, Plus, Minus, Star, Colon,
                 Ge, Le, End };

struct Token {
  Tok kind = Tok::End;
  std::string_view text;
  double value = 0.0;
  std::size_t pos = 0;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> toks;
  std::size_t i = 0;
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && is_ident(s[j])) ++j;
      t.kind = Tok::Ident;
      t.text = s.substr(i, j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* first = s.data() + i;
      const char* last = s.data() + s.size();
      auto res = std::from_chars(first, last, t.value);
      if (res.ec != std::errc()) throw ParseError("malformed number", i);
      t.kind = Tok::Number;
      t.text = s.substr(i, static_cast<std::size_t>(res.ptr - first));
      i += t.text.size();
    } else {
      auto two = s.substr(i, 2);
      if (two == ">=") {
        t.kind = Tok::Ge;
        i += 2;
      } else if (two == "<=") {
        t.kind = Tok::Le;
        i += 2;
      } else {
        switch (c) {
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case '[': t.kind = Tok::LBrack; break;
          case ']': t.kind = Tok::RBrack; break;
          case ',': t.kind = Tok::Comma; break;
          case '+': t.kind = Tok::Plus; break;
          case '-': t.kind = Tok::Minus; break;
          case '*': t.kind = Tok::Star; break;
          case ':': t.kind = Tok::Colon; break;
          default: throw ParseError(std::string("unexpected character '") + c + "'", i);
        }
        ++i;
      }
      t.text = s.substr(t.pos, i - t.pos);
    }
    toks.push_back(t);
  }
  Token end;
  end.kind = Tok::End;
  end.pos = s.size();
  toks.push_back(end);
  return toks;
}

bool is_keyword(std::string_view w) {
  return w == "not" || w == "and" || w == "or" || w == "top" || w == "bot" || w == "U" ||
         w == "R" || w == "F" || w == "G";
}

std::optional<int> state_index(std::string_view w) {
  if (w.size() < 2 || w[0] != 'x') return std::nullopt;
  int idx = 0;
  auto res = std::from_chars(w.data() + 1, w.data() + w.size(), idx);
  if (res.ec != std::errc() || res.ptr != w.data() + w.size() || idx < 0) return std::nullopt;
  return idx;
}

class Parser {
 public:
  Parser(std::string_view text, const ParseOptions& opts) : toks_(lex(text)), opts_(opts) {}

  Formula run() {
    Formula f = disjunction();
    if (peek().kind != Tok::End) throw ParseError("unexpected trailing input", peek().pos);
    return f;
  }

 private:
  // Linear expression accumulated as coefficients plus constant.
  struct Linear {
    std::vector<double> coef;
    double constant = 0.0;

    void add_var(int idx, double c) {
      if (static_cast<int>(coef.size()) <= idx) coef.resize(static_cast<std::size_t>(idx) + 1, 0.0);
      coef[static_cast<std::size_t>(idx)] += c;
    }
  };

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool accept(Tok k) {
    if (peek().kind == k) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_word(std::string_view w) {
    if (peek().kind == Tok::Ident && peek().text == w) {
      ++pos_;
      return true;
    }
    return false;
  }
  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) throw ParseError(std::string("expected ") + what, peek().pos);
    return next();
  }

  Formula disjunction() {
    std::vector<Formula> parts{conjunction()};
    while (accept_word("or")) parts.push_back(conjunction());
    return parts.size() == 1 ? parts.front() : Formula::disjunction(std::move(parts));
  }

  Formula conjunction() {
    std::vector<Formula> parts{temporal()};
    while (accept_word("and")) parts.push_back(temporal());
    return parts.size() == 1 ? parts.front() : Formula::conjunction(std::move(parts));
  }

  Formula temporal() {
    Formula lhs = unary();
    if (peek().kind == Tok::Ident && (peek().text == "U" || peek().text == "R") &&
        peek(1).kind == Tok::LBrack) {
      const bool until = next().text == "U";
      auto [a, b] = interval();
      Formula rhs = unary();
      return until ? Formula::until(a, b, std::move(lhs), std::move(rhs))
                   : Formula::release(a, b, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula unary() {
    if (accept_word("not")) return Formula::negation(unary());
    if (peek().kind == Tok::Ident && (peek().text == "F" || peek().text == "G") &&
        peek(1).kind == Tok::LBrack) {
      const bool ev = next().text == "F";
      auto [a, b] = interval();
      Formula body = unary();
      return ev ? Formula::eventually(a, b, std::move(body)) : Formula::always(a, b, std::move(body));
    }
    return primary();
  }

  Formula primary() {
    const Token& t = peek();
    if (t.kind == Tok::Ident) {
      if (t.text == "top") {
        ++pos_;
        return Formula::top();
      }
      if (t.text == "bot") {
        ++pos_;
        return Formula::bottom();
      }
      if (is_keyword(t.text)) throw ParseError("unexpected keyword '" + std::string(t.text) + "'", t.pos);
      ++pos_;
      std::string name(t.text);
      if (accept(Tok::Colon)) {
        if (peek().kind != Tok::LParen) throw ParseError("expected atom after label", peek().pos);
        auto atom = try_atom(name);
        if (!atom) throw ParseError("expected affine atom after label", peek().pos);
        return *atom;
      }
      if (!opts_.env) throw ParseError("unknown predicate '" + name + "'", t.pos);
      auto it = opts_.env->find(name);
      if (it == opts_.env->end()) throw ParseError("unknown predicate '" + name + "'", t.pos);
      AffinePredicate p = it->second;
      if (p.name().empty()) p = p.renamed(name);
      return Formula::atom(std::move(p));
    }
    if (t.kind == Tok::LParen) {
      if (auto atom = try_atom({})) return *atom;
      ++pos_;
      Formula inner = disjunction();
      expect(Tok::RParen, "')'");
      return inner;
    }
    throw ParseError("expected a formula", t.pos);
  }

  std::optional<Formula> try_atom(std::string name) {
    const std::size_t save = pos_;
    const std::size_t open = peek().pos;
    ++pos_;  // '('
    Linear lhs;
    if (!linear(lhs)) {
      pos_ = save;
      return std::nullopt;
    }
    bool ge;
    if (accept(Tok::Ge)) {
      ge = true;
    } else if (accept(Tok::Le)) {
      ge = false;
    } else {
      pos_ = save;
      return std::nullopt;
    }
    Linear rhs;
    if (!linear(rhs)) throw ParseError("malformed right-hand side of atom", peek().pos);
    expect(Tok::RParen, "')' closing atom");
    // lhs >= rhs  <=>  lhs - rhs >= 0
    const double sign = ge ? 1.0 : -1.0;
    const std::size_t n = std::max(lhs.coef.size(), rhs.coef.size());
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double l = i < lhs.coef.size() ? lhs.coef[i] : 0.0;
      const double r = i < rhs.coef.size() ? rhs.coef[i] : 0.0;
      a[static_cast<Eigen::Index>(i)] = sign * (l - r);
    }
    const double b = sign * (lhs.constant - rhs.constant);
    if (n == 0 || (a.array() == 0.0).all()) {
      throw ParseError("atom does not depend on the state", open);
    }
    // Normalize -0.0 so printing is stable.
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (a[i] == 0.0) a[i] = 0.0;
    return Formula::atom(AffinePredicate(std::move(a), b == 0.0 ? 0.0 : b, std::move(name)));
  }

  // term (('+'|'-') term)*; returns false without consuming on a non-linear
  // start so the caller can backtrack.
  bool linear(Linear& out) {
    bool any = false;
    double sign = 1.0;
    if (accept(Tok::Minus)) {
      sign = -1.0;
    } else {
      accept(Tok::Plus);
    }
    for (;;) {
      if (!term(out, sign)) return any ? throw ParseError("expected term", peek().pos), false : false;
      any = true;
      if (accept(Tok::Plus)) {
        sign = 1.0;
        if (accept(Tok::Minus)) sign = -1.0;
      } else if (accept(Tok::Minus)) {
        sign = -1.0;
      } else {
        return true;
      }
    }
  }

  bool term(Linear& out, double sign) {
    const Token& t = peek();
    if (t.kind == Tok::Minus) {
      ++pos_;
      return term(out, -sign);
    }
    if (t.kind == Tok::Number) {
      ++pos_;
      double c = sign * t.value;
      if (accept(Tok::Star)) {
        const Token& v = peek();
        auto idx = v.kind == Tok::Ident ? state_index(v.text) : std::nullopt;
        if (!idx) throw ParseError("expected state variable xN after '*'", v.pos);
        ++pos_;
        out.add_var(*idx, c);
      } else {
        out.constant += c;
      }
      return true;
    }
    if (t.kind == Tok::Ident) {
      auto idx = state_index(t.text);
      if (!idx) return false;
      ++pos_;
      double c = sign;
      if (accept(Tok::Star)) {
        const Token& n = expect(Tok::Number, "coefficient");
        c *= n.value;
      }
      out.add_var(*idx, c);
      return true;
    }
    return false;
  }

  std::pair<int, int> interval() {
    expect(Tok::LBrack, "'['");
    const Token& a = expect(Tok::Number, "interval lower bound");
    expect(Tok::Comma, "','");
    const Token& b = expect(Tok::Number, "interval upper bound");
    expect(Tok::RBrack, "']'");
    if (a.value > b.value) throw ParseError("interval lower bound exceeds upper bound", a.pos);
    if (opts_.period > 0.0) {
      auto [lo, hi] = seconds_to_steps(a.value, b.value, opts_.period);
      return {lo, hi};
    }
    if (a.value != std::floor(a.value) || b.value != std::floor(b.value)) {
      throw ParseError("interval bounds must be integer steps", a.pos);
    }
    return {static_cast<int>(a.value), static_cast<int>(b.value)};
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const ParseOptions& opts_;
};

}  // namespace

Formula parse(std::string_view text, const ParseOptions& options) {
  Parser p(text, options);
  return to_nnf(p.run());
}

}  // namespace stlrisk
