#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlisa/error.hpp"
#include "nlisa/fuzzy.hpp"
#include "nlisa/query.hpp"
#include "nlisa/truth.hpp"

namespace nlisa {

// Reduced search domain of every variable of one conjunct.
struct DomainAssignment {
  std::map<std::string, std::vector<EntityId>> domains;  // each ascending
  std::size_t k_x = 0;
  std::size_t k_y = 0;
  std::vector<std::string> fallbacks;  // variables without a positive constraint

  const std::vector<EntityId>& of(const std::string& var) const {
    auto it = domains.find(var);
    if (it == domains.end()) throw std::out_of_range("no domain for variable '" + var + "'");
    return it->second;
  }

  static DomainAssignment full(const QueryGraph& q, std::size_t num_entities) {
    DomainAssignment d;
    std::vector<EntityId> all(num_entities);
    std::iota(all.begin(), all.end(), EntityId{0});
    d.domains[std::string(kFreeVariable)] = all;
    for (auto& v : q.existentials()) d.domains[v] = all;
    d.k_x = d.k_y = num_entities;
    return d;
  }
};

// Ranks every entity for one variable using the whole query.
class GlobalScorer {
 public:
  virtual ~GlobalScorer() = default;
  // One finite score per entity; higher is more plausible.
  virtual std::vector<double> score_all(const QueryGraph& q, const std::string& target) const = 0;
};

struct LocalIndexOptions {
  TNormKind kind = TNormKind::Product;
  bool fold_negated = false;  // also fold 1 - rt for negated incident edges
};

// The k best entities by descending score, ties by ascending id.
inline std::vector<EntityId> top_k(const std::vector<double>& scores, std::size_t k) {
  std::vector<EntityId> ids(scores.size());
  std::iota(ids.begin(), ids.end(), EntityId{0});
  k = std::min(k, ids.size());
  auto better = [&](EntityId a, EntityId b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
  if (k < ids.size()) std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), better);
  ids.resize(k);
  std::sort(ids.begin(), ids.end(), better);
  return ids;
}

// Relation-tail score of every entity for `var`, folded over the positive
// edges incident to it. nullopt when there is no such edge.
inline std::optional<std::vector<double>> local_scores(const QueryGraph& q, const std::string& var,
                                                       const TruthProvider& p, const LocalIndexOptions& opts = {}) {
  if (!q.has_variable(var)) throw std::invalid_argument("variable '" + var + "' does not occur in the query");
  const auto n = p.num_entities();
  std::optional<std::vector<double>> scores;
  auto fold = [&](RelationId r, bool negated) {
    if (negated && !opts.fold_negated) return;
    if (!scores) scores.emplace(n, 1.0);
    auto& s = *scores;
    for (EntityId e = 0; e < n; ++e) {
      double rt = p.relation_tail(r, e);
      s[e] = tnorm_unchecked(s[e], negated ? 1.0 - rt : rt, opts.kind);
    }
  };
  for (const auto& e : q.edges) {
    if (e.tail.is_variable() && e.tail.name == var) fold(e.relation, e.negated);
    if (e.head.is_variable() && e.head.name == var) fold(reverse(e.relation), e.negated);
  }
  return scores;
}

// Top-k entities for `var` in rank order. A variable with no positive
// constraint gets the first k entities by id.
inline std::vector<EntityId> local_indices(const QueryGraph& q, const std::string& var, std::size_t k,
                                           const TruthProvider& p, const LocalIndexOptions& opts = {},
                                           bool* fell_back = nullptr) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  auto scores = local_scores(q, var, p, opts);
  if (fell_back) *fell_back = !scores;
  if (!scores) {
    std::vector<EntityId> ids(std::min(k, p.num_entities()));
    std::iota(ids.begin(), ids.end(), EntityId{0});
    return ids;
  }
  return top_k(*scores, k);
}

namespace detail {
inline std::vector<EntityId> sorted(std::vector<EntityId> v) {
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace detail

// Existentials get local indices of size k_x. The free variable gets local
// indices of size k_y, or the top k_y of the global scorer when one is given.
inline DomainAssignment cut_domain(const QueryGraph& q, std::size_t k_x, std::size_t k_y, const TruthProvider& p,
                                   const GlobalScorer* gs = nullptr, const LocalIndexOptions& opts = {}) {
  if (k_x == 0 || k_y == 0) throw std::invalid_argument("domain sizes must be at least 1");
  DomainAssignment d;
  d.k_x = k_x;
  d.k_y = k_y;
  const std::string y(kFreeVariable);
  for (const auto& v : q.existentials()) {
    bool fb = false;
    d.domains[v] = detail::sorted(local_indices(q, v, k_x, p, opts, &fb));
    if (fb) d.fallbacks.push_back(v);
  }
  if (gs) {
    d.domains[y] = detail::sorted(top_k(gs->score_all(q, y), k_y));
  } else {
    bool fb = false;
    d.domains[y] = detail::sorted(local_indices(q, y, k_y, p, opts, &fb));
    if (fb) d.fallbacks.push_back(y);
  }
  return d;
}

// One assignment per conjunct. In local mode the free variable's scores are
// combined across conjuncts with the t-conorm, so every conjunct shares one
// free-variable domain; in global mode each conjunct takes its own top k_y.
inline std::vector<DomainAssignment> cut_formula_domains(const EFO1Formula& f, std::size_t k_x, std::size_t k_y,
                                                         const TruthProvider& p, const GlobalScorer* gs = nullptr,
                                                         const LocalIndexOptions& opts = {}) {
  std::vector<DomainAssignment> out;
  for (const auto& q : f.conjuncts) out.push_back(cut_domain(q, k_x, k_y, p, gs, opts));
  if (gs || f.conjuncts.size() < 2) return out;
  const std::string y(kFreeVariable);
  std::optional<std::vector<double>> combined;
  for (const auto& q : f.conjuncts) {
    // a conjunct without a positive constraint on y admits every entity
    auto s = local_scores(q, y, p, opts).value_or(std::vector<double>(p.num_entities(), 1.0));
    if (!combined) {
      combined = std::move(s);
      continue;
    }
    for (std::size_t e = 0; e < combined->size(); ++e)
      (*combined)[e] = tconorm_unchecked((*combined)[e], s[e], opts.kind);
  }
  auto shared = top_k(*combined, k_y);
  shared = detail::sorted(std::move(shared));
  for (auto& d : out) d.domains[y] = shared;
  return out;
}

// Global rankings computed elsewhere, one JSON object per line:
//   {"query_id": ..., "variable": "y", "ranked_entity_ids": [...]}
class PrecomputedRankings {
 public:
  static PrecomputedRankings load(std::istream& in, std::size_t num_entities) {
    PrecomputedRankings r;
    r.num_entities_ = num_entities;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad ranking record: ") + e.what(), line_no);
      }
      auto id = j.at("query_id").is_string() ? j.at("query_id").get<std::string>()
                                             : std::to_string(j.at("query_id").get<long long>());
      auto ranked = j.at("ranked_entity_ids").get<std::vector<EntityId>>();
      for (auto e : ranked)
        if (e >= num_entities) throw DataError("ranked entity id out of range on line " + std::to_string(line_no));
      r.rankings_[id][j.value("variable", std::string(kFreeVariable))] = std::move(ranked);
    }
    return r;
  }

  // Score = -(rank); unranked entities score below every ranked one.
  std::vector<double> scores(const std::string& query_id, const std::string& var) const {
    std::vector<double> s(num_entities_, -static_cast<double>(num_entities_) - 1.0);
    auto q = rankings_.find(query_id);
    if (q == rankings_.end()) throw DataError("no precomputed ranking for query " + query_id);
    auto v = q->second.find(var);
    if (v == q->second.end()) throw DataError("no precomputed ranking for variable " + var + " of query " + query_id);
    for (std::size_t i = 0; i < v->second.size(); ++i) s[v->second[i]] = -static_cast<double>(i);
    return s;
  }

  bool contains(const std::string& query_id) const { return rankings_.count(query_id) > 0; }

 private:
  std::size_t num_entities_ = 0;
  std::unordered_map<std::string, std::map<std::string, std::vector<EntityId>>> rankings_;
};

// Adapts one query's precomputed rankings to the GlobalScorer interface.
class PrecomputedScorer final : public GlobalScorer {
 public:
  PrecomputedScorer(const PrecomputedRankings& r, std::string query_id) : r_(&r), id_(std::move(query_id)) {}
  std::vector<double> score_all(const QueryGraph&, const std::string& target) const override {
    return r_->scores(id_, target);
  }

 private:
  const PrecomputedRankings* r_;
  std::string id_;
};

}  // namespace nlisa
