#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nlisa/error.hpp"
#include "nlisa/kg.hpp"

namespace nlisa {

inline constexpr std::string_view kFreeVariable = "y";

enum class TermKind { Constant, Existential, Free };

struct Term {
  TermKind kind = TermKind::Free;
  EntityId entity = 0;  // Constant only
  std::string name;     // variable name, or the constant's entity name

  static Term constant(EntityId e, std::string entity_name) { return {TermKind::Constant, e, std::move(entity_name)}; }
  static Term existential(std::string var) { return {TermKind::Existential, 0, std::move(var)}; }
  static Term free() { return {TermKind::Free, 0, std::string(kFreeVariable)}; }

  bool is_variable() const { return kind != TermKind::Constant; }

  friend bool operator==(const Term& a, const Term& b) {
    if (a.kind != b.kind) return false;
    return a.kind == TermKind::Constant ? a.entity == b.entity : a.name == b.name;
  }
};

struct QueryEdge {
  Term head;
  RelationId relation = 0;
  Term tail;
  bool negated = false;

  friend bool operator==(const QueryEdge&, const QueryEdge&) = default;
};

// A constant-constant literal evaluated against the graph at parse time.
struct GroundAtom {
  EntityId head;
  RelationId relation;
  EntityId tail;
  bool negated;
};

// One conjunct. Every edge touches at least one variable; ground atoms are
// folded into scalar_prefix.
struct QueryGraph {
  std::vector<QueryEdge> edges;
  std::vector<GroundAtom> ground_atoms;
  double scalar_prefix = 1.0;

  // Existential variable names, sorted.
  std::vector<std::string> existentials() const {
    std::set<std::string> names;
    for (const auto& e : edges) {
      if (e.head.kind == TermKind::Existential) names.insert(e.head.name);
      if (e.tail.kind == TermKind::Existential) names.insert(e.tail.name);
    }
    return {names.begin(), names.end()};
  }

  bool has_variable(std::string_view name) const {
    return std::any_of(edges.begin(), edges.end(), [&](const QueryEdge& e) {
      return (e.head.is_variable() && e.head.name == name) || (e.tail.is_variable() && e.tail.name == name);
    });
  }
};

// Disjunctive normal form; all conjuncts share the free variable y.
struct EFO1Formula {
  std::vector<QueryGraph> conjuncts;
};

// ---------------------------------------------------------------------------
// Unresolved syntax. Names are kept as written so templates with $c1 / $r1
// placeholders can be handled before grounding.

struct PatternAtom {
  std::string relation;
  std::string head;
  std::string tail;
  bool negated = false;
  std::size_t position = 0;
};

struct FormulaPattern {
  std::vector<std::string> existentials;          // declared, in order
  std::vector<std::vector<PatternAtom>> conjuncts;  // DNF

  bool is_existential(std::string_view name) const {
    return std::find(existentials.begin(), existentials.end(), name) != existentials.end();
  }
  bool is_variable(std::string_view name) const { return name == kFreeVariable || is_existential(name); }
};

namespace detail {

enum class Tok { Ident, LParen, RParen, Comma, And, Or, Not, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

inline bool is_ident_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != ',' && c != '&' && c != '|' &&
         c != '!';
}

class Lexer {
 public:
  Lexer(std::string_view text, std::size_t offset) : text_(text), i_(offset) {}

  Token next() {
    while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
    std::size_t p = i_;
    if (i_ >= text_.size()) return {Tok::End, "", p};
    // UTF-8 connectives
    if (text_.compare(i_, 3, "∧") == 0) return i_ += 3, Token{Tok::And, "&", p};
    if (text_.compare(i_, 3, "∨") == 0) return i_ += 3, Token{Tok::Or, "|", p};
    if (text_.compare(i_, 2, "¬") == 0) return i_ += 2, Token{Tok::Not, "!", p};
    char c = text_[i_];
    switch (c) {
      case '(': ++i_; return {Tok::LParen, "(", p};
      case ')': ++i_; return {Tok::RParen, ")", p};
      case ',': ++i_; return {Tok::Comma, ",", p};
      case '&': ++i_; return {Tok::And, "&", p};
      case '|': ++i_; return {Tok::Or, "|", p};
      case '!': ++i_; return {Tok::Not, "!", p};
      default: break;
    }
    while (i_ < text_.size() && is_ident_char(text_[i_])) {
      if (text_.compare(i_, 3, "∧") == 0 || text_.compare(i_, 3, "∨") == 0 ||
          text_.compare(i_, 2, "¬") == 0)
        break;
      ++i_;
    }
    return {Tok::Ident, std::string(text_.substr(p, i_ - p)), p};
  }

 private:
  std::string_view text_;
  std::size_t i_;
};

using Dnf = std::vector<std::vector<PatternAtom>>;

class Parser {
 public:
  Parser(std::string_view text, std::size_t offset) : lex_(text, offset) { advance(); }

  Dnf parse() {
    Dnf d = disjunction();
    if (cur_.kind != Tok::End) fail("unexpected '" + cur_.text + "'");
    return d;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError("syntax error: " + msg, cur_.pos); }

  void advance() { cur_ = lex_.next(); }

  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    advance();
  }

  Dnf disjunction() {
    Dnf out = conjunction();
    while (cur_.kind == Tok::Or) {
      advance();
      Dnf rhs = conjunction();
      out.insert(out.end(), rhs.begin(), rhs.end());
    }
    return out;
  }

  Dnf conjunction() {
    Dnf out = unit();
    while (cur_.kind == Tok::And) {
      advance();
      Dnf rhs = unit();
      Dnf product;
      product.reserve(out.size() * rhs.size());
      for (const auto& a : out)
        for (const auto& b : rhs) {
          auto merged = a;
          merged.insert(merged.end(), b.begin(), b.end());
          product.push_back(std::move(merged));
        }
      out = std::move(product);
    }
    return out;
  }

  Dnf unit() {
    if (cur_.kind == Tok::LParen) {
      advance();
      Dnf d = disjunction();
      expect(Tok::RParen, "')'");
      return d;
    }
    bool negated = false;
    if (cur_.kind == Tok::Not) {
      std::size_t p = cur_.pos;
      advance();
      if (cur_.kind == Tok::LParen || cur_.kind == Tok::Not)
        throw UnsupportedQuery("negation is only allowed directly on atoms", p);
      negated = true;
    }
    return {{atom(negated)}};
  }

  PatternAtom atom(bool negated) {
    if (cur_.kind != Tok::Ident) fail("expected relation name");
    if (is_quantifier(cur_.text)) fail("quantifiers are only allowed as a prefix of the whole formula");
    PatternAtom a;
    a.position = cur_.pos;
    a.relation = cur_.text;
    a.negated = negated;
    advance();
    expect(Tok::LParen, "'(' after relation name");
    if (cur_.kind != Tok::Ident) fail("expected term");
    a.head = cur_.text;
    advance();
    expect(Tok::Comma, "','");
    if (cur_.kind != Tok::Ident) fail("expected term");
    a.tail = cur_.text;
    advance();
    expect(Tok::RParen, "')'");
    return a;
  }

  static bool is_quantifier(std::string_view s) {
    return s == "EX" || s == "EXISTS" || s == "ALL" || s == "FORALL" || s == "FA";
  }

  Lexer lex_;
  Token cur_{Tok::End, "", 0};
};

inline bool is_var_name(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

// Looks like a variable rather than an entity: a lowercase letter followed
// by digits, e.g. "z" or "x3".
inline bool looks_like_variable(std::string_view s) {
  if (s.empty() || !std::islower(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace detail

// Grammar:
//   formula := [("EX" | "EXISTS" | "∃") var ("," var)* "."] disj
//   disj    := conj ("|" conj)*
//   conj    := unit ("&" unit)*
//   unit    := "(" disj ")" | ["!"] atom
//   atom    := relation "(" term "," term ")"
// 'y' is the free variable; undeclared names are constants.
inline FormulaPattern parse_pattern(std::string_view text) {
  FormulaPattern out;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  auto word_end = i;
  while (word_end < text.size() && std::isalpha(static_cast<unsigned char>(text[word_end]))) ++word_end;
  std::string_view word = text.substr(i, word_end - i);
  bool exists_symbol = text.compare(i, 3, "∃") == 0;
  bool forall_symbol = text.compare(i, 3, "∀") == 0;
  auto followed_by_space = [&](std::size_t e) {
    return e < text.size() && std::isspace(static_cast<unsigned char>(text[e]));
  };
  if (forall_symbol || ((word == "ALL" || word == "FORALL" || word == "FA") && followed_by_space(word_end)))
    throw UnsupportedQuery("universal quantification is not supported (EFO1 queries only)", i);
  if (exists_symbol || ((word == "EX" || word == "EXISTS") && followed_by_space(word_end))) {
    i = exists_symbol ? i + 3 : word_end;
    auto dot = text.find('.', i);
    if (dot == std::string_view::npos) throw ParseError("syntax error: quantifier prefix must end with '.'", i);
    std::string_view vars = text.substr(i, dot - i);
    std::size_t start = 0;
    while (start <= vars.size()) {
      auto comma = vars.find(',', start);
      auto piece = detail::trim(vars.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      while (!piece.empty() && (piece.front() == ' ' || piece.front() == '\t')) piece.remove_prefix(1);
      while (!piece.empty() && (piece.back() == ' ' || piece.back() == '\t')) piece.remove_suffix(1);
      if (!detail::is_var_name(piece)) throw ParseError("syntax error: bad variable name in quantifier prefix", i + start);
      if (piece == kFreeVariable) throw UnsupportedQuery("the free variable y cannot be quantified", i + start);
      if (out.is_existential(piece)) throw ParseError("variable declared twice", i + start);
      out.existentials.emplace_back(piece);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    i = dot + 1;
  }
  detail::Parser p(text, i);
  out.conjuncts = p.parse();
  return out;
}

namespace detail {

struct VarGraph {
  std::vector<std::string> names;                // index 0 is the free variable when present
  std::vector<std::set<std::size_t>> neighbors;  // distinct variable neighbours, no self loops

  std::size_t index(const std::string& n) const {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
  }
};

inline VarGraph var_graph(const QueryGraph& q) {
  VarGraph g;
  if (q.has_variable(kFreeVariable)) g.names.emplace_back(kFreeVariable);
  for (auto& n : q.existentials()) g.names.push_back(n);
  g.neighbors.resize(g.names.size());
  for (const auto& e : q.edges) {
    if (!e.head.is_variable() || !e.tail.is_variable()) continue;
    auto a = g.index(e.head.name), b = g.index(e.tail.name);
    if (a == b) continue;
    g.neighbors[a].insert(b);
    g.neighbors[b].insert(a);
  }
  return g;
}

// Hop distances from `source`; unreachable nodes get npos.
inline std::vector<std::size_t> bfs_distances(const std::vector<std::set<std::size_t>>& adj, std::size_t source) {
  constexpr auto inf = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(adj.size(), inf);
  std::queue<std::size_t> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto v : adj[u])
      if (dist[v] == inf) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  return dist;
}

}  // namespace detail

// Resolves names against the graph's symbol tables and validates each
// conjunct. Throws ParseError (syntax, unknown symbol, wrong free-variable
// count) or UnsupportedQuery (universal quantifier, non-atomic negation).
inline EFO1Formula resolve(const FormulaPattern& pat, const KnowledgeGraph& g) {
  const auto& sym = g.symbols();
  EFO1Formula f;
  bool any_free = false;
  for (const auto& conj : pat.conjuncts)
    for (const auto& a : conj)
      if (a.head == kFreeVariable || a.tail == kFreeVariable) any_free = true;
  for (const auto& conj : pat.conjuncts) {
    QueryGraph q;
    for (const auto& a : conj) {
      auto rel = sym.find_relation(a.relation);
      if (!rel) throw ParseError("unknown relation '" + a.relation + "'", a.position);
      auto term = [&](const std::string& name) -> Term {
        if (name == kFreeVariable) return Term::free();
        if (pat.is_existential(name)) return Term::existential(name);
        if (auto e = sym.find_entity(name)) return Term::constant(*e, name);
        if (detail::looks_like_variable(name)) {
          if (!any_free) throw ParseError("formula has no free variable (the free variable must be named y)", a.position);
          throw ParseError("undeclared variable '" + name + "': more than one free variable", a.position);
        }
        throw ParseError("unknown entity '" + name + "'", a.position);
      };
      Term h = term(a.head), t = term(a.tail);
      if (!h.is_variable() && !t.is_variable()) {
        double v = g.contains(h.entity, *rel, t.entity) ? 1.0 : 0.0;
        if (a.negated) v = 1.0 - v;
        q.ground_atoms.push_back({h.entity, *rel, t.entity, a.negated});
        q.scalar_prefix = std::min(q.scalar_prefix, v);
        continue;
      }
      q.edges.push_back({std::move(h), *rel, std::move(t), a.negated});
    }
    if (!q.has_variable(kFreeVariable)) {
      std::size_t pos = conj.empty() ? 0 : conj.front().position;
      throw ParseError(any_free ? "every disjunct must mention the free variable y"
                                : "formula has no free variable (the free variable must be named y)",
                       pos);
    }
    auto vg = detail::var_graph(q);
    auto dist = detail::bfs_distances(vg.neighbors, 0);
    for (std::size_t i = 0; i < dist.size(); ++i)
      if (dist[i] == static_cast<std::size_t>(-1))
        throw ParseError("variable '" + vg.names[i] + "' is not connected to y", conj.front().position);
    f.conjuncts.push_back(std::move(q));
  }
  if (f.conjuncts.empty()) throw ParseError("empty formula", 0);
  return f;
}

inline EFO1Formula parse_formula(std::string_view text, const KnowledgeGraph& g) {
  return resolve(parse_pattern(text), g);
}

// ---------------------------------------------------------------------------
// Printing

inline std::string to_string(const QueryGraph& q, const Symbols& sym) {
  std::ostringstream out;
  auto ex = q.existentials();
  if (!ex.empty()) {
    out << "EX ";
    for (std::size_t i = 0; i < ex.size(); ++i) out << (i ? ", " : "") << ex[i];
    out << ". ";
  }
  bool first = true;
  auto term = [&](const Term& t) { return t.kind == TermKind::Constant ? sym.entity_name(t.entity) : t.name; };
  for (const auto& e : q.edges) {
    out << (first ? "" : " & ") << (e.negated ? "!" : "") << sym.relation_name(e.relation) << '(' << term(e.head)
        << ", " << term(e.tail) << ')';
    first = false;
  }
  for (const auto& a : q.ground_atoms) {
    out << (first ? "" : " & ") << (a.negated ? "!" : "") << sym.relation_name(a.relation) << '('
        << sym.entity_name(a.head) << ", " << sym.entity_name(a.tail) << ')';
    first = false;
  }
  return out.str();
}

// Conjuncts in parentheses joined by '|'. Existentials are declared once;
// conjuncts reuse names but never share bindings.
inline std::string to_string(const EFO1Formula& f, const Symbols& sym) {
  if (f.conjuncts.size() == 1) return to_string(f.conjuncts.front(), sym);
  std::set<std::string> all;
  for (const auto& q : f.conjuncts)
    for (auto& n : q.existentials()) all.insert(n);
  std::ostringstream out;
  if (!all.empty()) {
    out << "EX ";
    bool first = true;
    for (auto& n : all) out << (first ? "" : ", ") << n, first = false;
    out << ". ";
  }
  for (std::size_t i = 0; i < f.conjuncts.size(); ++i) {
    auto s = to_string(f.conjuncts[i], sym);
    if (auto dot = s.find(". "); s.rfind("EX ", 0) == 0 && dot != std::string::npos) s = s.substr(dot + 2);
    out << (i ? " | " : "") << '(' << s << ')';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Structure

// An existential variable with exactly one distinct variable neighbour.
// Constant edges and self loops are ignored; ties go to the smallest name.
inline std::optional<std::string> find_leaf(const QueryGraph& q) {
  auto vg = detail::var_graph(q);
  std::optional<std::string> best;
  for (std::size_t i = 0; i < vg.names.size(); ++i) {
    if (vg.names[i] == kFreeVariable || vg.neighbors[i].size() != 1) continue;
    if (!best || vg.names[i] < *best) best = vg.names[i];
  }
  return best;
}

// Existentials by BFS hop distance from y, ties by name.
inline std::vector<std::string> order_by_distance(const QueryGraph& q) {
  auto vg = detail::var_graph(q);
  if (vg.names.empty() || vg.names.front() != kFreeVariable) throw std::invalid_argument("query has no free variable");
  auto dist = detail::bfs_distances(vg.neighbors, 0);
  std::vector<std::pair<std::size_t, std::string>> keyed;
  for (std::size_t i = 1; i < vg.names.size(); ++i) {
    if (dist[i] == static_cast<std::size_t>(-1)) throw std::invalid_argument("query graph is disconnected");
    keyed.emplace_back(dist[i], vg.names[i]);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (auto& [d, n] : keyed) out.push_back(n);
  return out;
}

// True iff leaf elimination leaves at least two variables joined by an edge.
// Parallel edges collapse to one.
inline bool is_cyclic(const QueryGraph& q) {
  auto vg = detail::var_graph(q);
  std::vector<bool> alive(vg.names.size(), true);
  auto degree = [&](std::size_t i) {
    return std::count_if(vg.neighbors[i].begin(), vg.neighbors[i].end(), [&](std::size_t j) { return alive[j]; });
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < vg.names.size(); ++i)
      if (alive[i] && vg.names[i] != kFreeVariable && degree(i) <= 1) {
        alive[i] = false;
        changed = true;
      }
  }
  for (std::size_t i = 0; i < vg.names.size(); ++i)
    if (alive[i] && degree(i) > 0) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Template catalog: "name<TAB>formula" per line, '#' comments.

struct QueryTemplate {
  std::string name;
  std::string formula;
};

inline std::vector<QueryTemplate> load_catalog(std::istream& in) {
  std::vector<QueryTemplate> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto tab = view.find('\t');
    if (tab == std::string_view::npos) throw ParseError("catalog line must be name<TAB>formula", line_no);
    out.push_back({std::string(detail::trim(view.substr(0, tab))), std::string(detail::trim(view.substr(tab + 1)))});
  }
  return out;
}

inline const QueryTemplate* find_template(const std::vector<QueryTemplate>& catalog, std::string_view name) {
  for (const auto& t : catalog)
    if (t.name == name) return &t;
  return nullptr;
}

}  // namespace nlisa
