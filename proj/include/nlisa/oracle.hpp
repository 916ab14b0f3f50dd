#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlisa/fuzzy.hpp"
#include "nlisa/kg.hpp"
#include "nlisa/query.hpp"
#include "nlisa/truth.hpp"

// Exhaustive reference evaluators. Nothing here reuses the engine's kernels.

namespace nlisa {

struct OracleResult {
  std::vector<std::string> variables;           // existentials, sorted
  std::vector<double> optimum;                  // per free candidate, indexed by entity id
  std::vector<std::vector<EntityId>> best;      // [candidate][variable]
};

namespace oracle_detail {

inline double literal(const TruthProvider& p, RelationId r, EntityId a, EntityId b, bool negated) {
  double v = p.truth(r, a, b);
  return negated ? 1.0 - v : v;
}

inline EntityId value_of(const Term& t, EntityId y, const std::vector<std::string>& vars,
                         const std::vector<EntityId>& assignment) {
  if (t.kind == TermKind::Constant) return t.entity;
  if (t.kind == TermKind::Free) return y;
  auto it = std::lower_bound(vars.begin(), vars.end(), t.name);
  return assignment[static_cast<std::size_t>(it - vars.begin())];
}

}  // namespace oracle_detail

// Fold of every literal of q, instantiated at (y, assignment), and the
// ground-atom prefix. `assignment` follows q.existentials().
inline double evaluate_assignment(const QueryGraph& q, const TruthProvider& p, TNormKind kind, EntityId y,
                                  const std::vector<EntityId>& assignment) {
  const auto vars = q.existentials();
  if (assignment.size() != vars.size()) throw std::invalid_argument("assignment does not cover every variable");
  double acc = q.scalar_prefix;
  for (const auto& e : q.edges) {
    EntityId h = oracle_detail::value_of(e.head, y, vars, assignment);
    EntityId t = oracle_detail::value_of(e.tail, y, vars, assignment);
    acc = tnorm(acc, oracle_detail::literal(p, e.relation, h, t, e.negated), kind);
  }
  return acc;
}

// Max over all |E|^n assignments for every free candidate.
inline OracleResult brute_force(const QueryGraph& q, const TruthProvider& p, TNormKind kind,
                                double budget = 1e7) {
  OracleResult out;
  out.variables = q.existentials();
  const std::size_t n = p.num_entities();
  const std::size_t vars = out.variables.size();
  if (std::pow(static_cast<double>(n), static_cast<double>(vars)) > budget)
    throw std::length_error("brute-force budget exceeded");
  out.optimum.assign(n, 0.0);
  out.best.assign(n, std::vector<EntityId>(vars, 0));
  if (n == 0) return out;
  std::vector<EntityId> a(vars, 0);
  for (EntityId y = 0; y < n; ++y) {
    std::fill(a.begin(), a.end(), 0);
    double best = -1.0;
    while (true) {
      double v = evaluate_assignment(q, p, kind, y, a);
      if (v > best) {
        best = v;
        out.best[y] = a;
      }
      // odometer, last variable fastest
      std::size_t i = vars;
      while (i > 0 && ++a[i - 1] == n) a[--i] = 0;
      if (i == 0) break;
    }
    out.optimum[y] = best;
  }
  return out;
}

namespace oracle_detail {

// Backtracking search for the values of y that admit a satisfying assignment
// on g under the closed-world reading.
class Traversal {
 public:
  Traversal(const QueryGraph& q, const KnowledgeGraph& g) : q_(q), g_(g) {
    names_.emplace_back(kFreeVariable);
    for (auto& v : q.existentials()) names_.push_back(v);
    value_.assign(names_.size(), kUnbound);
  }

  std::set<EntityId> run() {
    for (const auto& a : q_.ground_atoms)
      if (g_.contains(a.head, a.relation, a.tail) == a.negated) return {};
    search();
    return answers_;
  }

 private:
  static constexpr EntityId kUnbound = static_cast<EntityId>(-1);

  std::size_t idx(const Term& t) const {
    return static_cast<std::size_t>(std::find(names_.begin(), names_.end(), t.name) - names_.begin());
  }
  EntityId bound(const Term& t) const { return t.is_variable() ? value_[idx(t)] : t.entity; }

  bool consistent() const {
    for (const auto& e : q_.edges) {
      EntityId h = bound(e.head), t = bound(e.tail);
      if (h == kUnbound || t == kUnbound) continue;
      if (g_.contains(h, e.relation, t) == e.negated) return false;
    }
    return true;
  }

  // Candidate values for variable v from its positive edges to bound terms;
  // every entity when there is none.
  std::vector<EntityId> candidates(std::size_t v, std::size_t* support) const {
    std::optional<std::vector<EntityId>> cur;
    *support = 0;
    for (const auto& e : q_.edges) {
      if (e.negated) continue;
      std::span<const EntityId> nb;
      if (e.tail.is_variable() && idx(e.tail) == v && bound(e.head) != kUnbound)
        nb = g_.observed_tails(bound(e.head), e.relation);
      else if (e.head.is_variable() && idx(e.head) == v && bound(e.tail) != kUnbound)
        nb = g_.observed_tails(bound(e.tail), reverse(e.relation));
      else
        continue;
      ++*support;
      if (!cur) {
        cur.emplace(nb.begin(), nb.end());
      } else {
        std::vector<EntityId> next;
        std::set_intersection(cur->begin(), cur->end(), nb.begin(), nb.end(), std::back_inserter(next));
        *cur = std::move(next);
      }
    }
    if (cur) return *cur;
    std::vector<EntityId> all(g_.num_entities());
    for (EntityId e = 0; e < all.size(); ++e) all[e] = e;
    return all;
  }

  // Returns true once y's current value is known to be an answer.
  bool search() {
    std::size_t pick = names_.size(), pick_support = 0;
    std::vector<EntityId> pick_cands;
    for (std::size_t v = 0; v < names_.size(); ++v) {
      if (value_[v] != kUnbound) continue;
      std::size_t support = 0;
      auto c = candidates(v, &support);
      if (pick == names_.size() || support > pick_support ||
          (support == pick_support && c.size() < pick_cands.size())) {
        pick = v;
        pick_support = support;
        pick_cands = std::move(c);
      }
    }
    if (pick == names_.size()) {
      answers_.insert(value_[0]);
      return true;
    }
    for (auto c : pick_cands) {
      if (pick == 0 && answers_.count(c)) continue;
      value_[pick] = c;
      bool done = consistent() && search();
      value_[pick] = kUnbound;
      if (done && value_[0] != kUnbound) return true;
    }
    return false;
  }

  const QueryGraph& q_;
  const KnowledgeGraph& g_;
  std::vector<std::string> names_;
  std::vector<EntityId> value_;
  std::set<EntityId> answers_;
};

}  // namespace oracle_detail

inline std::set<EntityId> traversal_answers(const QueryGraph& q, const KnowledgeGraph& g) {
  return oracle_detail::Traversal(q, g).run();
}

// Union of the conjuncts' classical answer sets.
inline std::set<EntityId> traversal_answers(const EFO1Formula& f, const KnowledgeGraph& g) {
  std::set<EntityId> out;
  for (const auto& q : f.conjuncts) {
    auto a = traversal_answers(q, g);
    out.insert(a.begin(), a.end());
  }
  return out;
}

}  // namespace nlisa
