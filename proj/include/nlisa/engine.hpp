#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nlisa/fuzzy.hpp"
#include "nlisa/indices.hpp"
#include "nlisa/query.hpp"
#include "nlisa/truth.hpp"

namespace nlisa {

struct EngineConfig {
  TNormKind kind = TNormKind::Product;
  std::size_t block_size = 512;   // free-variable candidates per local-search block
  bool record_witnesses = false;
  unsigned workers = 1;
};

// Scores over the free variable's domain, with optional witness
// assignments of every existential variable.
struct AnswerRanking {
  std::vector<EntityId> domain;
  std::vector<double> scores;
  std::vector<std::string> witness_variables;
  std::vector<std::vector<EntityId>> witnesses;  // [candidate][variable]

  // 0 for entities outside the domain.
  double score_of(EntityId e) const {
    auto it = std::lower_bound(domain.begin(), domain.end(), e);
    return (it != domain.end() && *it == e) ? scores[it - domain.begin()] : 0.0;
  }

  std::vector<double> dense(std::size_t num_entities) const {
    std::vector<double> out(num_entities, 0.0);
    for (std::size_t i = 0; i < domain.size(); ++i) out[domain[i]] = scores[i];
    return out;
  }
};

// Live state of one conjunct during search. Variable 0 is the free variable.
class SearchState {
 public:
  struct VarEdge {
    std::size_t head;
    std::size_t tail;
    RelationId relation;
    bool negated;
    bool alive = true;
  };
  // Oriented so the truth value is P_relation(constant, var).
  struct ConstEdge {
    EntityId constant;
    RelationId relation;
    std::size_t var;
    bool negated;
    bool alive = true;
  };
  // Back-pointers of a removed leaf: argmax[j] indexes the leaf's domain for
  // the parent's j-th candidate.
  struct LeafRecord {
    std::size_t var;
    std::size_t parent;
    std::vector<std::uint32_t> argmax;
  };

  SearchState(const QueryGraph& q, const DomainAssignment& domains, TNormKind kind)
      : kind_(kind), scalar_prefix_(q.scalar_prefix) {
    names_.emplace_back(kFreeVariable);
    for (auto& v : q.existentials()) names_.push_back(v);
    for (const auto& n : names_) fuzzy_.emplace_back(domains.of(n));
    for (const auto& f : fuzzy_)
      if (f.size() == 0) throw std::invalid_argument("empty variable domain");
    removed_.assign(names_.size(), false);
    assigned_.assign(names_.size(), false);
    assignment_.resize(names_.size());
    for (const auto& e : q.edges) {
      if (e.head.is_variable() && e.tail.is_variable())
        var_edges_.push_back({index(e.head.name), index(e.tail.name), e.relation, e.negated});
      else if (e.head.is_variable())
        const_edges_.push_back({e.tail.entity, reverse(e.relation), index(e.head.name), e.negated});
      else
        const_edges_.push_back({e.head.entity, e.relation, index(e.tail.name), e.negated});
    }
  }

  TNormKind kind() const { return kind_; }
  double scalar_prefix() const { return scalar_prefix_; }
  std::size_t num_variables() const { return names_.size(); }
  const std::string& name(std::size_t v) const { return names_[v]; }
  std::size_t index(const std::string& n) const {
    auto it = std::find(names_.begin(), names_.end(), n);
    if (it == names_.end()) throw std::out_of_range("unknown variable '" + n + "'");
    return static_cast<std::size_t>(it - names_.begin());
  }

  FuzzyVector& fuzzy(std::size_t v) { return fuzzy_[v]; }
  const FuzzyVector& fuzzy(std::size_t v) const { return fuzzy_[v]; }
  const FuzzyVector& free_vector() const { return fuzzy_[0]; }

  std::vector<VarEdge>& var_edges() { return var_edges_; }
  const std::vector<VarEdge>& var_edges() const { return var_edges_; }
  std::vector<ConstEdge>& const_edges() { return const_edges_; }
  const std::vector<ConstEdge>& const_edges() const { return const_edges_; }
  std::vector<LeafRecord>& leaf_records() { return leaves_; }
  const std::vector<LeafRecord>& leaf_records() const { return leaves_; }

  bool removed(std::size_t v) const { return removed_[v]; }
  void mark_removed(std::size_t v) { removed_[v] = true; }
  bool assigned(std::size_t v) const { return assigned_[v]; }
  const std::vector<std::uint32_t>& assignment(std::size_t v) const { return assignment_[v]; }
  void set_assignment(std::size_t v, std::vector<std::uint32_t> a) {
    assignment_[v] = std::move(a);
    assigned_[v] = true;
  }

  bool has_const_edges() const {
    return std::any_of(const_edges_.begin(), const_edges_.end(), [](const ConstEdge& e) { return e.alive; });
  }

  // Distinct live variable neighbours of v, self loops excluded.
  std::vector<std::size_t> neighbors(std::size_t v) const {
    std::vector<std::size_t> out;
    for (const auto& e : var_edges_) {
      if (!e.alive || e.head == e.tail) continue;
      if (e.head == v) out.push_back(e.tail);
      if (e.tail == v) out.push_back(e.head);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool is_leaf(std::size_t v) const { return v != 0 && !removed_[v] && neighbors(v).size() == 1; }

  // Cheapest leaf first: smallest domain, then smallest name.
  std::optional<std::size_t> next_leaf() const {
    std::optional<std::size_t> best;
    for (std::size_t v = 1; v < names_.size(); ++v) {
      if (!is_leaf(v)) continue;
      if (!best || fuzzy_[v].size() < fuzzy_[*best].size() ||
          (fuzzy_[v].size() == fuzzy_[*best].size() && names_[v] < names_[*best]))
        best = v;
    }
    return best;
  }

  // Live, unassigned existentials by hop distance from y, ties by name.
  std::vector<std::size_t> core_order() const {
    std::vector<std::set<std::size_t>> adj(names_.size());
    for (const auto& e : var_edges_) {
      if (!e.alive || e.head == e.tail) continue;
      adj[e.head].insert(e.tail);
      adj[e.tail].insert(e.head);
    }
    auto dist = detail::bfs_distances(adj, 0);
    std::vector<std::size_t> out;
    for (std::size_t v = 1; v < names_.size(); ++v)
      if (!removed_[v] && !assigned_[v] && !adj[v].empty()) {
        if (dist[v] == static_cast<std::size_t>(-1)) throw std::invalid_argument("query graph is disconnected");
        out.push_back(v);
      }
    std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
      return dist[a] != dist[b] ? dist[a] < dist[b] : names_[a] < names_[b];
    });
    return out;
  }

 private:
  TNormKind kind_;
  double scalar_prefix_;
  std::vector<std::string> names_;
  std::vector<FuzzyVector> fuzzy_;
  std::vector<bool> removed_;
  std::vector<bool> assigned_;
  std::vector<std::vector<std::uint32_t>> assignment_;  // [var][free candidate] -> index into the var's domain
  std::vector<VarEdge> var_edges_;
  std::vector<ConstEdge> const_edges_;
  std::vector<LeafRecord> leaves_;
};

namespace detail {

// Folded truth of every live edge between a and b, rows over row_domain
// (a subset of a's domain, in order) and columns over b's domain.
inline ScoreMatrix edge_matrix(const SearchState& st, const TruthProvider& p, std::size_t a, std::size_t b,
                               std::span<const EntityId> row_domain) {
  std::optional<ScoreMatrix> m;
  const auto& cols = st.fuzzy(b).domain;
  for (const auto& e : st.var_edges()) {
    if (!e.alive) continue;
    RelationId r;
    if (e.head == a && e.tail == b)
      r = e.relation;
    else if (e.head == b && e.tail == a)
      r = reverse(e.relation);
    else
      continue;
    auto next = p.truth_matrix(r, row_domain, cols, e.negated);
    if (!m)
      m = std::move(next);
    else
      m->conjoin(next, st.kind());
  }
  if (!m) throw std::logic_error("no live edge between the two variables");
  return std::move(*m);
}

// Calls body(lo, hi) over consecutive row ranges small enough to keep a
// row block of an edge matrix in cache.
inline void for_row_blocks(std::size_t rows, const std::function<void(std::size_t, std::size_t)>& body) {
  constexpr std::size_t kRows = 64;
  for (std::size_t lo = 0; lo < rows; lo += kRows) body(lo, std::min(rows, lo + kRows));
}

inline void parallel_for(std::size_t tasks, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || tasks <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::size_t>(workers, tasks));
  for (unsigned w = 0; w < n; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < tasks; t += n) body(t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Folds every constant edge and self loop into the fuzzy vector of its
// variable, then drops it.
inline void remove_const_node(SearchState& st, const TruthProvider& p) {
  for (auto& e : st.const_edges()) {
    if (!e.alive) continue;
    auto& mu = st.fuzzy(e.var);
    mu.conjoin(p.truth_row(e.relation, e.constant, mu.domain, e.negated), st.kind());
    e.alive = false;
  }
  for (auto& e : st.var_edges()) {
    if (!e.alive || e.head != e.tail) continue;
    auto& mu = st.fuzzy(e.head);
    std::vector<double> diag(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      double v = p.truth(e.relation, mu.domain[i], mu.domain[i]);
      diag[i] = e.negated ? 1.0 - v : v;
    }
    mu.conjoin(diag, st.kind());
    e.alive = false;
  }
}

// Eliminates leaf x into its single neighbour u:
//   mu_u <- mu_u T max_x (T_edges P(x, u) T mu_x).
inline void remove_leaf_node(SearchState& st, std::size_t x, const TruthProvider& p) {
  if (!st.is_leaf(x)) throw std::logic_error("variable '" + st.name(x) + "' is not a leaf");
  const std::size_t u = st.neighbors(x).front();
  const auto& mu_x = st.fuzzy(x);
  const TNormKind kind = st.kind();
  const std::size_t nu = st.fuzzy(u).size();
  std::vector<double> best(nu, 0.0);
  std::vector<std::uint32_t> argmax(nu, 0);
  bool first = true;
  detail::for_row_blocks(mu_x.size(), [&](std::size_t lo, std::size_t hi) {
    ScoreMatrix m = detail::edge_matrix(st, p, x, u, std::span<const EntityId>(mu_x.domain).subspan(lo, hi - lo));
    for (std::size_t i = lo; i < hi; ++i) {
      const double* row = m.row(i - lo);
      const double w = mu_x.values[i];
      for (std::size_t j = 0; j < nu; ++j) {
        double v = tnorm_unchecked(row[j], w, kind);
        if (first || v > best[j]) {
          best[j] = v;
          argmax[j] = static_cast<std::uint32_t>(i);
        }
      }
      first = false;
    }
  });
  st.fuzzy(u).conjoin(best, kind);
  SearchState::LeafRecord rec{x, u, {}};
  rec.argmax.assign(argmax.begin(), argmax.end());
  st.leaf_records().push_back(std::move(rec));
  for (auto& e : st.var_edges())
    if (e.alive && (e.head == x || e.tail == x)) e.alive = false;
  st.mark_removed(x);
}

// Picks, for every free-variable candidate s, the value of x that maximises
// the fold of x's membership, the truth of its edges to y (at s) and to
// already assigned variables (at their chosen values), and an optimistic
// bound max_w (P(x, w) T mu_w(w)) for each unassigned neighbour w. Edges
// whose endpoints are then all fixed are closed and their truth, together
// with mu_x at the chosen value, is folded into mu_y(s).
inline void local_optimize(SearchState& st, std::size_t x, const TruthProvider& p, const EngineConfig& cfg = {}) {
  if (x == 0 || st.removed(x) || st.assigned(x)) throw std::logic_error("variable is not an open core variable");
  auto nbrs = st.neighbors(x);
  if (nbrs.empty()) throw std::logic_error("variable '" + st.name(x) + "' has no incident edges");
  const TNormKind kind = st.kind();
  const auto& mu_x = st.fuzzy(x);
  const std::size_t nx = mu_x.size();

  // s-independent part: membership and optimistic bounds
  std::vector<double> base = mu_x.values;
  bool touches_y = false;
  std::vector<std::size_t> fixed;
  for (auto w : nbrs) {
    if (w == 0) {
      touches_y = true;
    } else if (st.assigned(w)) {
      fixed.push_back(w);
    } else {
      const auto& mu_w = st.fuzzy(w);
      detail::for_row_blocks(nx, [&](std::size_t lo, std::size_t hi) {
        ScoreMatrix m = detail::edge_matrix(st, p, x, w, std::span<const EntityId>(mu_x.domain).subspan(lo, hi - lo));
        for (std::size_t i = lo; i < hi; ++i) {
          const double* row = m.row(i - lo);
          double best = 0.0;
          for (std::size_t j = 0; j < m.cols(); ++j)
            best = std::max(best, tnorm_unchecked(row[j], mu_w.values[j], kind));
          base[i] = tnorm_unchecked(base[i], best, kind);
        }
      });
    }
  }
  // transposed so that a fixed neighbour value selects a contiguous row
  std::vector<ScoreMatrix> fixed_t;
  for (auto w : fixed) fixed_t.push_back(detail::edge_matrix(st, p, w, x, st.fuzzy(w).domain));

  auto& mu_y = st.fuzzy(0);
  const std::size_t ny = mu_y.size();
  std::vector<std::uint32_t> choice(ny, 0);
  const std::size_t block = std::max<std::size_t>(1, cfg.block_size);
  const std::size_t blocks = (ny + block - 1) / block;

  detail::parallel_for(blocks, cfg.workers, [&](std::size_t b) {
    const std::size_t lo = b * block, hi = std::min(ny, lo + block);
    std::optional<ScoreMatrix> y_t;
    if (touches_y) y_t = detail::edge_matrix(st, p, 0, x, std::span<const EntityId>(mu_y.domain).subspan(lo, hi - lo));
    std::vector<double> cur(nx);
    for (std::size_t s = lo; s < hi; ++s) {
      std::copy(base.begin(), base.end(), cur.begin());
      if (y_t) {
        const double* yr = y_t->row(s - lo);
        for (std::size_t i = 0; i < nx; ++i) cur[i] = tnorm_unchecked(cur[i], yr[i], kind);
      }
      for (std::size_t k = 0; k < fixed.size(); ++k) {
        const double* fr = fixed_t[k].row(st.assignment(fixed[k])[s]);
        for (std::size_t i = 0; i < nx; ++i) cur[i] = tnorm_unchecked(cur[i], fr[i], kind);
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i < nx; ++i)
        if (cur[i] > cur[best]) best = i;
      choice[s] = static_cast<std::uint32_t>(best);

      double closed = mu_x.values[best];
      if (y_t) closed = tnorm_unchecked(closed, y_t->row(s - lo)[best], kind);
      for (std::size_t k = 0; k < fixed.size(); ++k)
        closed = tnorm_unchecked(closed, fixed_t[k].row(st.assignment(fixed[k])[s])[best], kind);
      mu_y.values[s] = tnorm_unchecked(mu_y.values[s], closed, kind);
    }
  });

  st.set_assignment(x, std::move(choice));
  for (auto& e : st.var_edges()) {
    if (!e.alive) continue;
    std::size_t other = e.head == x ? e.tail : (e.tail == x ? e.head : static_cast<std::size_t>(-1));
    if (other == static_cast<std::size_t>(-1)) continue;
    if (other == 0 || st.assigned(other)) e.alive = false;
  }
}

// Full assignment of every existential for free candidate s (an index into
// y's domain), from the core assignments and leaf back-pointers.
inline std::vector<EntityId> reconstruct_witness(const SearchState& st, std::size_t s) {
  constexpr auto unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> idx(st.num_variables(), unset);
  idx[0] = s;
  for (std::size_t v = 1; v < st.num_variables(); ++v)
    if (st.assigned(v)) idx[v] = st.assignment(v)[s];
  const auto& leaves = st.leaf_records();
  for (auto it = leaves.rbegin(); it != leaves.rend(); ++it) idx[it->var] = it->argmax[idx[it->parent]];
  std::vector<EntityId> out;
  for (std::size_t v = 1; v < st.num_variables(); ++v) {
    if (idx[v] == unset) throw std::logic_error("variable '" + st.name(v) + "' was never eliminated");
    out.push_back(st.fuzzy(v).domain[idx[v]]);
  }
  return out;
}

// Constant-node removal, leaf elimination, then local optimisation of the
// remaining cyclic core. Returns mu_y folded with the ground-atom prefix.
inline AnswerRanking answer_conjunct(const QueryGraph& q, const DomainAssignment& domains, const TruthProvider& p,
                                     const EngineConfig& cfg = {}) {
  SearchState st(q, domains, cfg.kind);
  remove_const_node(st, p);
  while (auto leaf = st.next_leaf()) remove_leaf_node(st, *leaf, p);
  for (auto x : st.core_order()) local_optimize(st, x, p, cfg);

  AnswerRanking out;
  const auto& mu_y = st.free_vector();
  out.domain = mu_y.domain;
  out.scores.resize(mu_y.size());
  for (std::size_t s = 0; s < mu_y.size(); ++s) out.scores[s] = tnorm_unchecked(mu_y.values[s], st.scalar_prefix(), cfg.kind);
  if (cfg.record_witnesses) {
    for (std::size_t v = 1; v < st.num_variables(); ++v) out.witness_variables.push_back(st.name(v));
    out.witnesses.reserve(mu_y.size());
    for (std::size_t s = 0; s < mu_y.size(); ++s) out.witnesses.push_back(reconstruct_witness(st, s));
  }
  return out;
}

// Per-conjunct rankings combined with the t-conorm over the union of their
// free-variable domains. Witnesses are kept only for single-conjunct formulas.
inline AnswerRanking combine_disjuncts(const std::vector<AnswerRanking>& parts, TNormKind kind) {
  if (parts.empty()) throw std::invalid_argument("no conjuncts");
  if (parts.size() == 1) return parts.front();
  AnswerRanking out;
  for (const auto& r : parts) out.domain.insert(out.domain.end(), r.domain.begin(), r.domain.end());
  std::sort(out.domain.begin(), out.domain.end());
  out.domain.erase(std::unique(out.domain.begin(), out.domain.end()), out.domain.end());
  out.scores.assign(out.domain.size(), 0.0);
  for (std::size_t i = 0; i < out.domain.size(); ++i) {
    double acc = parts.front().score_of(out.domain[i]);
    for (std::size_t c = 1; c < parts.size(); ++c) acc = tconorm_unchecked(acc, parts[c].score_of(out.domain[i]), kind);
    out.scores[i] = acc;
  }
  return out;
}

struct SearchOptions {
  std::size_t k_x = 0;  // 0 means every entity
  std::size_t k_y = 0;
  LocalIndexOptions local;
  EngineConfig engine;
};

// Domain cut, then answer_conjunct per conjunct, then disjunction.
inline AnswerRanking answer_formula(const EFO1Formula& f, const TruthProvider& p, const SearchOptions& opts = {},
                                    const GlobalScorer* gs = nullptr) {
  const auto n = p.num_entities();
  auto kx = opts.k_x == 0 ? n : std::min(opts.k_x, n);
  auto ky = opts.k_y == 0 ? n : std::min(opts.k_y, n);
  auto local = opts.local;
  local.kind = opts.engine.kind;
  auto domains = cut_formula_domains(f, kx, ky, p, gs, local);
  std::vector<AnswerRanking> parts;
  for (std::size_t c = 0; c < f.conjuncts.size(); ++c)
    parts.push_back(answer_conjunct(f.conjuncts[c], domains[c], p, opts.engine));
  return combine_disjuncts(parts, opts.engine.kind);
}

}  // namespace nlisa
