#pragma once

// scLTL formulas: abstract syntax in negation-at-atoms form, the concrete text
// grammar, one-letter derivatives, simplification and the good-prefix bounds.
//
// Concrete grammar (tightest binding first):
//
//   unary   !atom   X f   F f           (F f is sugar for true U f)
//   until   f U g                        (right associative)
//   and     f & g                        (left associative)
//   or      f | g                        (left associative)
//
// plus `true`, identifiers and parentheses. `false` is not part of the input
// language; it only arises from derivatives.

#include <array>
#include <cctype>
#include <compare>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "supctl/common.hpp"

namespace supctl {

enum class Op : std::uint8_t { True, False, Atom, NegAtom, And, Or, Next, Until };

/// Immutable, structurally shared scLTL syntax tree.
class Formula {
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

 public:
  Formula() : Formula(tt()) {}

  static Formula tt() {
    static const Formula t(make(Op::True, {}, nullptr, nullptr, true));
    return t;
  }
  static Formula ff() {
    static const Formula f(make(Op::False, {}, nullptr, nullptr, true));
    return f;
  }
  static Formula atom(std::string name) { return Formula(make(Op::Atom, std::move(name), nullptr, nullptr, true)); }
  static Formula neg_atom(std::string name) {
    return Formula(make(Op::NegAtom, std::move(name), nullptr, nullptr, true));
  }
  static Formula conj(const Formula& l, const Formula& r) { return Formula(make(Op::And, {}, l.node_, r.node_)); }
  static Formula disj(const Formula& l, const Formula& r) { return Formula(make(Op::Or, {}, l.node_, r.node_)); }
  static Formula next(const Formula& g) { return Formula(make(Op::Next, {}, g.node_, nullptr)); }
  static Formula until(const Formula& g, const Formula& h) { return Formula(make(Op::Until, {}, g.node_, h.node_)); }
  static Formula eventually(const Formula& g) { return until(tt(), g); }

  Op op() const noexcept { return node_->op; }
  bool is_true() const noexcept { return node_->op == Op::True; }
  bool is_false() const noexcept { return node_->op == Op::False; }
  bool is_literal() const noexcept { return node_->op == Op::Atom || node_->op == Op::NegAtom; }
  bool is_temporal() const noexcept { return node_->op == Op::Next || node_->op == Op::Until; }

  const std::string& name() const noexcept { return node_->name; }
  Formula lhs() const { return Formula(node_->lhs); }
  Formula rhs() const { return Formula(node_->rhs); }
  Formula sub() const { return Formula(node_->lhs); }

  std::size_t hash() const noexcept { return node_->hash; }
  std::size_t size() const noexcept { return node_->size; }
  /// True when the node is already a fixpoint of simplify().
  bool simplified() const noexcept { return node_->simplified; }

  friend bool operator==(const Formula& a, const Formula& b) {
    return a.node_ == b.node_ || (a.node_->hash == b.node_->hash && compare(a.node_.get(), b.node_.get()) == 0);
  }
  friend std::strong_ordering operator<=>(const Formula& a, const Formula& b) {
    int c = compare(a.node_.get(), b.node_.get());
    return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

 private:
  friend Formula simplify(const Formula&);

  struct Node {
    Op op;
    std::string name;
    NodePtr lhs;
    NodePtr rhs;
    std::size_t hash = 0;
    std::size_t size = 1;
    bool simplified = false;
  };

  explicit Formula(NodePtr n) : node_(std::move(n)) {}

  static NodePtr make(Op op, std::string name, NodePtr l, NodePtr r, bool simplified = false) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->name = std::move(name);
    std::size_t h = std::hash<int>{}(static_cast<int>(op)) * 0x9e3779b97f4a7c15ULL;
    if (!n->name.empty()) h ^= std::hash<std::string>{}(n->name) + 0x9e3779b9 + (h << 6) + (h >> 2);
    if (l) {
      h ^= l->hash + 0x9e3779b9 + (h << 6) + (h >> 2);
      n->size += l->size;
    }
    if (r) {
      h ^= (r->hash * 31) + 0x9e3779b9 + (h << 6) + (h >> 2);
      n->size += r->size;
    }
    n->hash = h;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    n->simplified = simplified;
    return n;
  }

  static Formula with_flag(const Formula& f) {
    if (f.simplified()) return f;
    return Formula(make(f.node_->op, f.node_->name, f.node_->lhs, f.node_->rhs, true));
  }

  static int compare(const Node* a, const Node* b) {
    if (a == b) return 0;
    if (a->op != b->op) return a->op < b->op ? -1 : 1;
    switch (a->op) {
      case Op::True:
      case Op::False:
        return 0;
      case Op::Atom:
      case Op::NegAtom:
        return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
      case Op::Next:
        return compare(a->lhs.get(), b->lhs.get());
      default: {
        int c = compare(a->lhs.get(), b->lhs.get());
        return c != 0 ? c : compare(a->rhs.get(), b->rhs.get());
      }
    }
  }

  NodePtr node_;
};

struct FormulaHash {
  std::size_t operator()(const Formula& f) const noexcept { return f.hash(); }
};

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline int precedence(const Formula& f) {
  switch (f.op()) {
    case Op::Or:
      return 1;
    case Op::And:
      return 2;
    case Op::Until:
      return f.lhs().is_true() ? 4 : 3;
    default:
      return 4;
  }
}

inline void print(const Formula& f, std::string& out) {
  auto wrapped = [&out](const Formula& g, bool parens) {
    if (parens) out += '(';
    print(g, out);
    if (parens) out += ')';
  };
  switch (f.op()) {
    case Op::True:
      out += "true";
      break;
    case Op::False:
      out += "false";
      break;
    case Op::Atom:
      out += f.name();
      break;
    case Op::NegAtom:
      out += '!';
      out += f.name();
      break;
    case Op::Next:
      out += "X ";
      wrapped(f.sub(), precedence(f.sub()) < 4);
      break;
    case Op::Until:
      if (f.lhs().is_true()) {
        out += "F ";
        wrapped(f.rhs(), precedence(f.rhs()) < 4);
      } else {
        wrapped(f.lhs(), precedence(f.lhs()) <= 3);
        out += " U ";
        wrapped(f.rhs(), precedence(f.rhs()) < 3);
      }
      break;
    case Op::And:
      wrapped(f.lhs(), precedence(f.lhs()) < 2);
      out += " & ";
      wrapped(f.rhs(), precedence(f.rhs()) <= 2);
      break;
    case Op::Or:
      wrapped(f.lhs(), false);
      out += " | ";
      wrapped(f.rhs(), precedence(f.rhs()) <= 1);
      break;
  }
}

}  // namespace detail

/// Renders f in the concrete grammar with the fewest parentheses that still
/// reproduce the same tree when parsed.
inline std::string to_string(const Formula& f) {
  std::string out;
  detail::print(f, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const ApOrdering& ap) : text_(text), ap_(ap) { advance(); }

  Formula parse() {
    Formula f = parse_or();
    if (tok_ != Tok::End) fail("unexpected '" + std::string(lexeme_) + "'");
    return f;
  }

 private:
  enum class Tok { Ident, True, Not, And, Or, Next, Eventually, Until, LParen, RParen, End };

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError("syntax error: " + msg, tok_pos_); }

  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok_pos_ = pos_;
    if (pos_ >= text_.size()) {
      tok_ = Tok::End;
      lexeme_ = "end of input";
      return;
    }
    char c = text_[pos_];
    auto single = [&](Tok t) {
      tok_ = t;
      lexeme_ = text_.substr(pos_, 1);
      ++pos_;
    };
    switch (c) {
      case '!':
        return single(Tok::Not);
      case '&':
        return single(Tok::And);
      case '|':
        return single(Tok::Or);
      case '(':
        return single(Tok::LParen);
      case ')':
        return single(Tok::RParen);
      default:
        break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_ + 1;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
        ++end;
      lexeme_ = text_.substr(pos_, end - pos_);
      pos_ = end;
      if (lexeme_ == "true")
        tok_ = Tok::True;
      else if (lexeme_ == "false")
        throw ParseError("syntax error: 'false' is not an scLTL constant", tok_pos_);
      else if (lexeme_ == "X")
        tok_ = Tok::Next;
      else if (lexeme_ == "F")
        tok_ = Tok::Eventually;
      else if (lexeme_ == "U")
        tok_ = Tok::Until;
      else
        tok_ = Tok::Ident;
      return;
    }
    tok_ = Tok::End;
    lexeme_ = text_.substr(pos_, 1);
    fail("unexpected character '" + std::string(lexeme_) + "'");
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (tok_ == Tok::Or) {
      advance();
      f = Formula::disj(f, parse_and());
    }
    return f;
  }

  Formula parse_and() {
    Formula f = parse_until();
    while (tok_ == Tok::And) {
      advance();
      f = Formula::conj(f, parse_until());
    }
    return f;
  }

  Formula parse_until() {
    Formula f = parse_unary();
    if (tok_ == Tok::Until) {
      advance();
      return Formula::until(f, parse_until());
    }
    return f;
  }

  Formula parse_unary() {
    switch (tok_) {
      case Tok::Not: {
        std::size_t at = tok_pos_;
        advance();
        Formula g = parse_unary();
        if (g.op() != Op::Atom) throw ParseError("syntax error: '!' may only be applied to an atom", at);
        return Formula::neg_atom(g.name());
      }
      case Tok::Next:
        advance();
        return Formula::next(parse_unary());
      case Tok::Eventually:
        advance();
        return Formula::eventually(parse_unary());
      default:
        return parse_primary();
    }
  }

  Formula parse_primary() {
    switch (tok_) {
      case Tok::True:
        advance();
        return Formula::tt();
      case Tok::Ident: {
        std::string name(lexeme_);
        if (!ap_.contains(name)) throw ParseError("undeclared atom '" + name + "'", tok_pos_);
        advance();
        return Formula::atom(std::move(name));
      }
      case Tok::LParen: {
        advance();
        Formula f = parse_or();
        if (tok_ != Tok::RParen) fail("expected ')'");
        advance();
        return f;
      }
      case Tok::End:
        fail("unexpected end of input");
      default:
        fail("unexpected '" + std::string(lexeme_) + "'");
    }
  }

  std::string_view text_;
  const ApOrdering& ap_;
  std::size_t pos_ = 0;
  std::size_t tok_pos_ = 0;
  Tok tok_ = Tok::End;
  std::string_view lexeme_;
};

inline void collect_atoms(const Formula& f, std::vector<std::string>& out) {
  switch (f.op()) {
    case Op::Atom:
    case Op::NegAtom:
      if (std::find(out.begin(), out.end(), f.name()) == out.end()) out.push_back(f.name());
      break;
    case Op::Next:
      collect_atoms(f.sub(), out);
      break;
    case Op::And:
    case Op::Or:
    case Op::Until:
      collect_atoms(f.lhs(), out);
      collect_atoms(f.rhs(), out);
      break;
    default:
      break;
  }
}

}  // namespace detail

/// Parses `text`; every atom must be declared in `ap`. Throws ParseError with
/// the byte offset of the offending token.
inline Formula parse(std::string_view text, const ApOrdering& ap) { return detail::Parser(text, ap).parse(); }

/// Atom names of f in order of first occurrence.
inline std::vector<std::string> atoms_of(const Formula& f) {
  std::vector<std::string> out;
  detail::collect_atoms(f, out);
  return out;
}

/// Parses with an AP ordering inferred from the text (order of first use).
inline std::pair<Formula, ApOrdering> parse_inferring_ap(std::string_view text) {
  std::vector<std::string> names;
  {
    std::size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t end = i + 1;
        while (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_')) ++end;
        std::string id(text.substr(i, end - i));
        if (id != "true" && id != "false" && id != "X" && id != "F" && id != "U" &&
            std::find(names.begin(), names.end(), id) == names.end())
          names.push_back(id);
        i = end;
      } else {
        ++i;
      }
    }
  }
  ApOrdering ap(names);
  return {parse(text, ap), ap};
}

// ---------------------------------------------------------------------------
// Simplification

namespace detail {

/// Boolean skeleton of a formula: literals and maximal temporal subterms are
/// the variables. NegAtom a is the complement of the variable for Atom a.
class BoolSkeleton {
 public:
  static constexpr std::size_t kMaxVars = 12;

  explicit BoolSkeleton(const Formula& f) { collect(f); }

  bool too_large() const { return vars_.size() > kMaxVars; }
  std::size_t num_vars() const { return vars_.size(); }
  const std::vector<Formula>& vars() const { return vars_; }

  /// Reorders the variables canonically (structural order).
  void sort_vars() { std::sort(vars_.begin(), vars_.end()); }

  bool eval(const Formula& f, std::uint32_t assignment) const {
    switch (f.op()) {
      case Op::True:
        return true;
      case Op::False:
        return false;
      case Op::Atom:
        return assignment >> index(f) & 1u;
      case Op::NegAtom:
        return !(assignment >> index(Formula::atom(f.name())) & 1u);
      case Op::And:
        return eval(f.lhs(), assignment) && eval(f.rhs(), assignment);
      case Op::Or:
        return eval(f.lhs(), assignment) || eval(f.rhs(), assignment);
      default:
        return assignment >> index(f) & 1u;
    }
  }

 private:
  void collect(const Formula& f) {
    switch (f.op()) {
      case Op::True:
      case Op::False:
        return;
      case Op::And:
      case Op::Or:
        collect(f.lhs());
        collect(f.rhs());
        return;
      case Op::NegAtom:
        add(Formula::atom(f.name()));
        return;
      default:
        add(f);
        return;
    }
  }

  void add(const Formula& v) {
    if (std::find(vars_.begin(), vars_.end(), v) == vars_.end()) vars_.push_back(v);
  }

  std::size_t index(const Formula& v) const {
    return static_cast<std::size_t>(std::find(vars_.begin(), vars_.end(), v) - vars_.begin());
  }

  std::vector<Formula> vars_;
};

struct Cube {
  std::uint32_t mask;   // variables that occur in the cube
  std::uint32_t value;  // their polarity
  auto operator<=>(const Cube&) const = default;
};

/// All prime implicants of the function given by its truth table
/// (Quine-McCluskey merging).
inline std::vector<Cube> prime_implicants(const std::vector<bool>& table, std::size_t nvars) {
  const std::uint32_t full = nvars == 32 ? ~0u : ((1u << nvars) - 1u);
  std::set<Cube> current;
  for (std::uint32_t m = 0; m < table.size(); ++m)
    if (table[m]) current.insert({full, m});
  std::vector<Cube> primes;
  while (!current.empty()) {
    std::set<Cube> merged;
    std::set<Cube> used;
    std::vector<Cube> cubes(current.begin(), current.end());
    for (std::size_t i = 0; i < cubes.size(); ++i) {
      for (std::size_t j = i + 1; j < cubes.size(); ++j) {
        if (cubes[i].mask != cubes[j].mask) continue;
        std::uint32_t diff = cubes[i].value ^ cubes[j].value;
        if (diff == 0 || (diff & (diff - 1)) != 0) continue;
        merged.insert({cubes[i].mask & ~diff, cubes[i].value & ~diff});
        used.insert(cubes[i]);
        used.insert(cubes[j]);
      }
    }
    for (const auto& c : cubes)
      if (!used.contains(c)) primes.push_back(c);
    current = std::move(merged);
  }
  std::sort(primes.begin(), primes.end());
  primes.erase(std::unique(primes.begin(), primes.end()), primes.end());
  return primes;
}

inline Formula fold(const std::vector<Formula>& parts, bool conjunction) {
  Formula acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i)
    acc = conjunction ? Formula::conj(acc, parts[i]) : Formula::disj(acc, parts[i]);
  return acc;
}

inline void flatten(const Formula& f, Op op, std::vector<Formula>& out) {
  if (f.op() == op) {
    flatten(f.lhs(), op, out);
    flatten(f.rhs(), op, out);
  } else {
    out.push_back(f);
  }
}

/// Fallback for skeletons with too many variables: ACI normal form plus the
/// identity and annihilator laws.
inline Formula aci_normalize(const Formula& f) {
  const Op op = f.op();
  const bool conjunction = op == Op::And;
  std::vector<Formula> parts;
  flatten(f, op, parts);
  std::vector<Formula> kept;
  for (const auto& p : parts) {
    if (conjunction ? p.is_false() : p.is_true()) return p;
    if (conjunction ? p.is_true() : p.is_false()) continue;
    kept.push_back(p);
  }
  if (kept.empty()) return conjunction ? Formula::tt() : Formula::ff();
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  return fold(kept, conjunction);
}

/// Reduces the Boolean layer of f (whose temporal subterms are already
/// simplified) to True, False, or the canonical sum of its prime implicants.
inline Formula reduce_boolean(const Formula& f) {
  BoolSkeleton sk(f);
  if (sk.too_large()) return aci_normalize(f);
  sk.sort_vars();
  const std::size_t n = sk.num_vars();
  std::vector<bool> table(std::size_t{1} << n);
  bool any = false, all = true;
  for (std::uint32_t m = 0; m < table.size(); ++m) {
    table[m] = sk.eval(f, m);
    any = any || table[m];
    all = all && table[m];
  }
  if (all) return Formula::tt();
  if (!any) return Formula::ff();

  std::vector<Formula> terms;
  for (const Cube& c : prime_implicants(table, n)) {
    std::vector<Formula> lits;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(c.mask >> i & 1u)) continue;
      const Formula& v = sk.vars()[i];
      if (c.value >> i & 1u) {
        lits.push_back(v);
      } else {
        // Temporal variables occur only positively, so primes never negate them.
        if (v.op() != Op::Atom) throw std::logic_error("negated temporal variable in prime implicant");
        lits.push_back(Formula::neg_atom(v.name()));
      }
    }
    std::sort(lits.begin(), lits.end());
    terms.push_back(fold(lits, true));
  }
  std::sort(terms.begin(), terms.end());
  return fold(terms, false);
}

}  // namespace detail

/// Rewrites f to a canonical equivalent: X true = true, X false = false,
/// g U true = true, g U false = false, false U h = h, and the Boolean layer
/// (maximal X/U subterms treated as opaque variables) reduced to True, False or
/// its canonical prime-implicant sum.
inline Formula simplify(const Formula& f) {
  if (f.simplified()) return f;
  switch (f.op()) {
    case Op::True:
    case Op::False:
    case Op::Atom:
    case Op::NegAtom:
      return Formula::with_flag(f);
    case Op::Next: {
      Formula g = simplify(f.sub());
      if (g.is_true() || g.is_false()) return g;
      return Formula::with_flag(Formula::next(g));
    }
    case Op::Until: {
      Formula g = simplify(f.lhs());
      Formula h = simplify(f.rhs());
      if (h.is_true() || h.is_false()) return h;
      if (g.is_false()) return h;
      return Formula::with_flag(Formula::until(g, h));
    }
    case Op::And:
    case Op::Or: {
      Formula l = simplify(f.lhs());
      Formula r = simplify(f.rhs());
      Formula combined = f.op() == Op::And ? Formula::conj(l, r) : Formula::disj(l, r);
      Formula reduced = detail::reduce_boolean(combined);
      return Formula::with_flag(reduced);
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Derivatives and good-prefix bounds

namespace detail {

inline Formula raw_derivative(const Formula& f, Letter v, const ApOrdering& ap) {
  switch (f.op()) {
    case Op::True:
    case Op::False:
      return f;
    case Op::Atom:
      return (v >> ap.index_of(f.name()) & 1u) ? Formula::tt() : Formula::ff();
    case Op::NegAtom:
      return (v >> ap.index_of(f.name()) & 1u) ? Formula::ff() : Formula::tt();
    case Op::And:
      return Formula::conj(raw_derivative(f.lhs(), v, ap), raw_derivative(f.rhs(), v, ap));
    case Op::Or:
      return Formula::disj(raw_derivative(f.lhs(), v, ap), raw_derivative(f.rhs(), v, ap));
    case Op::Next:
      return f.sub();
    case Op::Until:
      return Formula::disj(raw_derivative(f.rhs(), v, ap),
                           Formula::conj(raw_derivative(f.lhs(), v, ap), f));
  }
  return f;
}

}  // namespace detail

/// Residual obligation after reading letter v; the result is simplified.
inline Formula derivative(const Formula& f, Letter v, const ApOrdering& ap) {
  return simplify(detail::raw_derivative(f, v, ap));
}

/// Sound under-approximation of the good-prefix set: some prefix of w drives
/// the residual to True.
inline bool good_prefix_lb(const Formula& f, std::span<const Letter> w, const ApOrdering& ap) {
  Formula r = simplify(f);
  if (r.is_true()) return true;
  for (Letter v : w) {
    r = derivative(r, v, ap);
    if (r.is_true()) return true;
  }
  return false;
}

/// Necessary condition for w to be a good prefix: the residual along w is not
/// False.
inline bool good_prefix_ub(const Formula& f, std::span<const Letter> w, const ApOrdering& ap) {
  Formula r = simplify(f);
  for (Letter v : w) {
    if (r.is_false()) return false;
    r = derivative(r, v, ap);
  }
  return !r.is_false();
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Formula& f) {
  using nlohmann::json;
  switch (f.op()) {
    case Op::True:
      return json{{"op", "true"}};
    case Op::False:
      return json{{"op", "false"}};
    case Op::Atom:
      return json{{"op", "atom"}, {"name", f.name()}};
    case Op::NegAtom:
      return json{{"op", "negatom"}, {"name", f.name()}};
    case Op::And:
      return json{{"op", "and"}, {"lhs", to_json(f.lhs())}, {"rhs", to_json(f.rhs())}};
    case Op::Or:
      return json{{"op", "or"}, {"lhs", to_json(f.lhs())}, {"rhs", to_json(f.rhs())}};
    case Op::Next:
      return json{{"op", "next"}, {"sub", to_json(f.sub())}};
    case Op::Until:
      return json{{"op", "until"}, {"lhs", to_json(f.lhs())}, {"rhs", to_json(f.rhs())}};
  }
  return {};
}

inline Formula formula_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("op")) throw LoadError("formula node without 'op'");
  const std::string op = j.at("op").get<std::string>();
  if (op == "true") return Formula::tt();
  if (op == "false") return Formula::ff();
  if (op == "atom") return Formula::atom(j.at("name").get<std::string>());
  if (op == "negatom") return Formula::neg_atom(j.at("name").get<std::string>());
  if (op == "and") return Formula::conj(formula_from_json(j.at("lhs")), formula_from_json(j.at("rhs")));
  if (op == "or") return Formula::disj(formula_from_json(j.at("lhs")), formula_from_json(j.at("rhs")));
  if (op == "next") return Formula::next(formula_from_json(j.at("sub")));
  if (op == "until") return Formula::until(formula_from_json(j.at("lhs")), formula_from_json(j.at("rhs")));
  throw LoadError("unknown formula node '" + op + "'");
}

}  // namespace supctl
