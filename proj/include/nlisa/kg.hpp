#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nlisa/error.hpp"

namespace nlisa {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// Base relation i is stored as 2i, its reverse as 2i+1.
constexpr RelationId reverse(RelationId r) { return r ^ 1u; }
constexpr bool is_reverse(RelationId r) { return (r & 1u) != 0; }
constexpr RelationId base_of(RelationId r) { return r & ~1u; }

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// Bidirectional name <-> id tables. Relation names are stored for base
// relations only; reverse relations print as "<name>^-1".
class Symbols {
 public:
  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_base_relations() const { return relations_.size(); }
  std::size_t num_relations() const { return 2 * relations_.size(); }

  const std::string& entity_name(EntityId e) const { return entities_.at(e); }
  std::string relation_name(RelationId r) const {
    const auto& base = relations_.at(r / 2);
    return is_reverse(r) ? base + "^-1" : base;
  }

  std::optional<EntityId> find_entity(std::string_view name) const {
    auto it = entity_ids_.find(std::string(name));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
  }

  // Accepts "name" and "name^-1".
  std::optional<RelationId> find_relation(std::string_view name) const {
    bool rev = false;
    if (name.size() > 3 && name.substr(name.size() - 3) == "^-1") {
      rev = true;
      name.remove_suffix(3);
    }
    auto it = relation_ids_.find(std::string(name));
    if (it == relation_ids_.end()) return std::nullopt;
    return rev ? reverse(it->second) : it->second;
  }

  EntityId add_entity(std::string_view name) {
    if (auto e = find_entity(name)) return *e;
    auto id = static_cast<EntityId>(entities_.size());
    entities_.emplace_back(name);
    entity_ids_.emplace(entities_.back(), id);
    return id;
  }

  RelationId add_relation(std::string_view name) {
    if (auto it = relation_ids_.find(std::string(name)); it != relation_ids_.end()) return it->second;
    auto id = static_cast<RelationId>(2 * relations_.size());
    relations_.emplace_back(name);
    relation_ids_.emplace(relations_.back(), id);
    return id;
  }

  friend bool operator==(const Symbols& a, const Symbols& b) {
    return a.entities_ == b.entities_ && a.relations_ == b.relations_;
  }

 private:
  std::vector<std::string> entities_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

enum class SymbolMode { create, strict };

// Immutable triple store with reverse closure. For every relation there is a
// CSR table head -> sorted tails, plus the sorted set of all tails.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  KnowledgeGraph(Symbols symbols, const std::vector<Triple>& base_triples) : symbols_(std::move(symbols)) {
    std::unordered_set<std::uint64_t> seen;
    for (const auto& t : base_triples) {
      check_ids(t);
      if (is_reverse(t.relation)) throw DataError("base triple list contains a reverse relation");
      std::uint64_t key = (std::uint64_t{t.head} * symbols_.num_relations() + t.relation) *
                              symbols_.num_entities() + t.tail;
      if (seen.insert(key).second) base_.push_back(t);
    }
    build_index();
  }

  const Symbols& symbols() const { return symbols_; }
  std::size_t num_entities() const { return symbols_.num_entities(); }
  std::size_t num_relations() const { return symbols_.num_relations(); }
  std::size_t num_base_relations() const { return symbols_.num_base_relations(); }

  // Directed triple count including reverses.
  std::size_t num_triples() const { return 2 * base_.size(); }

  // Base triples in load order, deduplicated.
  const std::vector<Triple>& base_triples() const { return base_; }

  std::span<const EntityId> observed_tails(EntityId head, RelationId r) const {
    check_entity(head);
    check_relation(r);
    const auto& idx = index_[r];
    return {idx.tails.data() + idx.offsets[head], idx.tails.data() + idx.offsets[head + 1]};
  }

  std::span<const EntityId> tails_of_relation(RelationId r) const {
    check_relation(r);
    return index_[r].all_tails;
  }

  bool contains(EntityId head, RelationId r, EntityId tail) const {
    auto tails = observed_tails(head, r);
    return std::binary_search(tails.begin(), tails.end(), tail);
  }

  // All directed triples, including synthesized reverses, ordered by
  // (relation, head, tail).
  std::vector<Triple> all_triples() const {
    std::vector<Triple> out;
    out.reserve(num_triples());
    for (RelationId r = 0; r < num_relations(); ++r)
      for (EntityId h = 0; h < num_entities(); ++h)
        for (EntityId t : observed_tails(h, r)) out.push_back({h, r, t});
    return out;
  }

  // Outgoing degree across every relation (reverse ones included).
  std::size_t degree(EntityId e) const {
    std::size_t d = 0;
    for (RelationId r = 0; r < num_relations(); ++r) d += observed_tails(e, r).size();
    return d;
  }

  // True iff every triple of *this is a triple of other and symbols agree.
  bool is_subgraph_of(const KnowledgeGraph& other) const {
    if (!(symbols_ == other.symbols_)) return false;
    return std::all_of(base_.begin(), base_.end(),
                       [&](const Triple& t) { return other.contains(t.head, t.relation, t.tail); });
  }

 private:
  struct RelationIndex {
    std::vector<std::uint32_t> offsets;
    std::vector<EntityId> tails;
    std::vector<EntityId> all_tails;
  };

  void check_entity(EntityId e) const {
    if (e >= num_entities()) throw std::out_of_range("entity id " + std::to_string(e) + " out of range");
  }
  void check_relation(RelationId r) const {
    if (r >= num_relations()) throw std::out_of_range("relation id " + std::to_string(r) + " out of range");
  }
  void check_ids(const Triple& t) const {
    check_entity(t.head);
    check_entity(t.tail);
    check_relation(t.relation);
  }

  void build_index() {
    const auto n = num_entities();
    index_.assign(num_relations(), {});
    std::vector<std::vector<std::pair<EntityId, EntityId>>> by_rel(num_relations());
    for (const auto& t : base_) {
      by_rel[t.relation].emplace_back(t.head, t.tail);
      by_rel[reverse(t.relation)].emplace_back(t.tail, t.head);
    }
    for (RelationId r = 0; r < num_relations(); ++r) {
      auto& pairs = by_rel[r];
      std::sort(pairs.begin(), pairs.end());
      auto& idx = index_[r];
      idx.offsets.assign(n + 1, 0);
      idx.tails.reserve(pairs.size());
      for (auto [h, t] : pairs) {
        ++idx.offsets[h + 1];
        idx.tails.push_back(t);
        idx.all_tails.push_back(t);
      }
      for (std::size_t i = 0; i < n; ++i) idx.offsets[i + 1] += idx.offsets[i];
      std::sort(idx.all_tails.begin(), idx.all_tails.end());
      idx.all_tails.erase(std::unique(idx.all_tails.begin(), idx.all_tails.end()), idx.all_tails.end());
    }
  }

  Symbols symbols_;
  std::vector<Triple> base_;
  std::vector<RelationIndex> index_;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Reads head<TAB>relation<TAB>tail lines. Blank lines and lines starting with
// '#' are skipped. In strict mode every name must already be in `symbols`.
// ParseError::position() is the 1-based line number.
inline KnowledgeGraph load_triples(std::istream& in, SymbolMode mode = SymbolMode::create, Symbols symbols = {}) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_tabs(view);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
      throw ParseError("malformed triple line, expected head<TAB>relation<TAB>tail", line_no);
    if (mode == SymbolMode::strict) {
      auto h = symbols.find_entity(fields[0]);
      auto r = symbols.find_relation(fields[1]);
      auto t = symbols.find_entity(fields[2]);
      if (!h || !t) throw DataError("unknown entity on line " + std::to_string(line_no));
      if (!r || is_reverse(*r)) throw DataError("unknown relation on line " + std::to_string(line_no));
      triples.push_back({*h, *r, *t});
    } else {
      auto h = symbols.add_entity(fields[0]);
      auto r = symbols.add_relation(fields[1]);
      auto t = symbols.add_entity(fields[2]);
      triples.push_back({h, r, t});
    }
  }
  return KnowledgeGraph(std::move(symbols), triples);
}

inline KnowledgeGraph load_triples(std::string_view text, SymbolMode mode = SymbolMode::create, Symbols symbols = {}) {
  std::istringstream in{std::string(text)};
  return load_triples(in, mode, std::move(symbols));
}

// Writes base triples in load order; reverses are re-synthesized on load.
inline void save_triples(const KnowledgeGraph& g, std::ostream& out) {
  const auto& sym = g.symbols();
  for (const auto& t : g.base_triples())
    out << sym.entity_name(t.head) << '\t' << sym.relation_name(t.relation) << '\t' << sym.entity_name(t.tail) << '\n';
}

}  // namespace nlisa
