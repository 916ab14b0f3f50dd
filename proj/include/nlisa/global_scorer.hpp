#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "nlisa/engine.hpp"
#include "nlisa/indices.hpp"
#include "nlisa/query.hpp"
#include "nlisa/truth.hpp"

namespace nlisa {

// q with `target` as the free variable and the old free variable renamed
// to an existential.
inline QueryGraph swap_roles(const QueryGraph& q, const std::string& target) {
  if (target == kFreeVariable) return q;
  if (!q.has_variable(target)) throw std::invalid_argument("variable '" + target + "' does not occur in the query");
  const std::string hidden = "_" + std::string(kFreeVariable);
  QueryGraph out = q;
  auto swap = [&](Term& t) {
    if (t.kind == TermKind::Free)
      t = Term::existential(hidden);
    else if (t.kind == TermKind::Existential && t.name == target)
      t = Term::free();
  };
  for (auto& e : out.edges) {
    swap(e.head);
    swap(e.tail);
  }
  return out;
}

// Reference coarse-to-fine scorer for small graphs: local indices of size k
// for every variable, then a full engine pass on the role-swapped query.
// Entities outside the coarse domain score -1.
class SearchGlobalScorer final : public GlobalScorer {
 public:
  SearchGlobalScorer(const TruthProvider& p, std::size_t k, TNormKind kind) : p_(&p), k_(k), kind_(kind) {}

  std::vector<double> score_all(const QueryGraph& q, const std::string& target) const override {
    auto swapped = swap_roles(q, target);
    const auto n = p_->num_entities();
    const auto k = std::min(k_ == 0 ? n : k_, n);
    LocalIndexOptions lo;
    lo.kind = kind_;
    auto domains = cut_domain(swapped, k, k, *p_, nullptr, lo);
    EngineConfig cfg;
    cfg.kind = kind_;
    auto ranking = answer_conjunct(swapped, domains, *p_, cfg);
    std::vector<double> out(n, -1.0);
    for (std::size_t i = 0; i < ranking.domain.size(); ++i) out[ranking.domain[i]] = ranking.scores[i];
    return out;
  }

 private:
  const TruthProvider* p_;
  std::size_t k_;
  TNormKind kind_;
};

inline SearchGlobalScorer oracle_global_scorer(const TruthProvider& p, std::size_t k = 0,
                                               TNormKind kind = TNormKind::Product) {
  return SearchGlobalScorer(p, k, kind);
}

}  // namespace nlisa
