#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nlisa/error.hpp"
#include "nlisa/fuzzy.hpp"
#include "nlisa/kg.hpp"

namespace nlisa {

// Calibrated atomic truth values P_r(a, b) and relation-tail scores.
// Head-side lookups go through reverse relations: truth(r, a, b) must equal
// truth(reverse(r), b, a).
class TruthProvider {
 public:
  virtual ~TruthProvider() = default;

  virtual std::size_t num_entities() const = 0;
  virtual double truth(RelationId r, EntityId a, EntityId b) const = 0;
  virtual double relation_tail(RelationId r, EntityId t) const = 0;

  // entry (i, j) = truth(r, rows[i], cols[j]), complemented when negated.
  virtual ScoreMatrix truth_matrix(RelationId r, std::span<const EntityId> rows, std::span<const EntityId> cols,
                                   bool negated) const {
    ScoreMatrix m({rows.begin(), rows.end()}, {cols.begin(), cols.end()});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double* out = m.row(i);
      for (std::size_t j = 0; j < cols.size(); ++j) {
        double v = truth(r, rows[i], cols[j]);
        out[j] = negated ? 1.0 - v : v;
      }
    }
    return m;
  }

  // truth(r, head, cols[j]) for a fixed head.
  virtual std::vector<double> truth_row(RelationId r, EntityId head, std::span<const EntityId> cols,
                                        bool negated) const {
    std::vector<double> out(cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
      double v = truth(r, head, cols[j]);
      out[j] = negated ? 1.0 - v : v;
    }
    return out;
  }
};

// Observed facts are 1, everything else epsilon.
class ExactProvider final : public TruthProvider {
 public:
  explicit ExactProvider(const KnowledgeGraph& g, double epsilon = 0.0) : g_(&g), epsilon_(epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  }

  std::size_t num_entities() const override { return g_->num_entities(); }
  double epsilon() const { return epsilon_; }
  const KnowledgeGraph& graph() const { return *g_; }

  double truth(RelationId r, EntityId a, EntityId b) const override {
    return g_->contains(a, r, b) ? 1.0 : epsilon_;
  }

  double relation_tail(RelationId r, EntityId t) const override {
    auto tails = g_->tails_of_relation(r);
    return std::binary_search(tails.begin(), tails.end(), t) ? 1.0 : epsilon_;
  }

  ScoreMatrix truth_matrix(RelationId r, std::span<const EntityId> rows, std::span<const EntityId> cols,
                           bool negated) const override {
    ScoreMatrix m({rows.begin(), rows.end()}, {cols.begin(), cols.end()}, negated ? 1.0 - epsilon_ : epsilon_);
    if (cols.empty()) return m;
    for (std::size_t i = 0; i < rows.size(); ++i) mark_row(r, rows[i], cols, m.row(i), negated);
    return m;
  }

  std::vector<double> truth_row(RelationId r, EntityId head, std::span<const EntityId> cols,
                                bool negated) const override {
    std::vector<double> out(cols.size(), negated ? 1.0 - epsilon_ : epsilon_);
    if (!cols.empty()) mark_row(r, head, cols, out.data(), negated);
    return out;
  }

 private:
  void mark_row(RelationId r, EntityId head, std::span<const EntityId> cols, double* out, bool negated) const {
    const double hit = negated ? 0.0 : 1.0;
    bool sorted = std::is_sorted(cols.begin(), cols.end());
    for (EntityId t : g_->observed_tails(head, r)) {
      if (sorted) {
        auto it = std::lower_bound(cols.begin(), cols.end(), t);
        if (it != cols.end() && *it == t) out[it - cols.begin()] = hit;
      } else {
        for (std::size_t j = 0; j < cols.size(); ++j)
          if (cols[j] == t) out[j] = hit;
      }
    }
  }

  const KnowledgeGraph* g_;
  double epsilon_;
};

// Raw link-prediction scores f_r(a, b) for base relations. Dense storage is
// |R| x |E| x |E|; sparse storage keeps the top entries of each (r, a) row
// and a floor score for the rest. Sparse rows may be absent.
struct RawScores {
  struct SparseRow {
    bool present = false;
    float floor = 0.0f;
    std::vector<EntityId> tails;  // ascending
    std::vector<float> scores;
  };

  std::size_t num_entities = 0;
  std::size_t num_relations = 0;  // base relations
  bool sparse = false;
  std::vector<float> dense;       // [r][a][b]
  std::vector<SparseRow> rows;    // [r][a]

  static RawScores make_dense(std::size_t entities, std::size_t relations, std::vector<float> values) {
    if (values.size() != relations * entities * entities) throw DataError("dense score tensor has the wrong size");
    RawScores s;
    s.num_entities = entities;
    s.num_relations = relations;
    s.dense = std::move(values);
    return s;
  }

  static RawScores make_sparse(std::size_t entities, std::size_t relations) {
    RawScores s;
    s.num_entities = entities;
    s.num_relations = relations;
    s.sparse = true;
    s.rows.resize(entities * relations);
    return s;
  }

  // rel is a base-relation index (0 .. num_relations).
  SparseRow& sparse_row(std::size_t rel, EntityId head) { return rows[rel * num_entities + head]; }
  const SparseRow& sparse_row(std::size_t rel, EntityId head) const { return rows[rel * num_entities + head]; }

  // nullopt when the sparse row is absent.
  std::optional<double> score(std::size_t rel, EntityId a, EntityId b) const {
    if (!sparse) return dense[(rel * num_entities + a) * num_entities + b];
    const auto& row = sparse_row(rel, a);
    if (!row.present) return std::nullopt;
    auto it = std::lower_bound(row.tails.begin(), row.tails.end(), b);
    if (it != row.tails.end() && *it == b) return row.scores[it - row.tails.begin()];
    return row.floor;
  }

  void validate() const {
    auto finite = [](float v) { return std::isfinite(v); };
    if (!sparse) {
      if (dense.size() != num_relations * num_entities * num_entities)
        throw DataError("dense score tensor has the wrong size");
      if (!std::all_of(dense.begin(), dense.end(), finite)) throw DataError("non-finite raw score");
      return;
    }
    if (rows.size() != num_relations * num_entities) throw DataError("sparse score table has the wrong size");
    for (const auto& row : rows) {
      if (!row.present) continue;
      if (!finite(row.floor) || !std::all_of(row.scores.begin(), row.scores.end(), finite))
        throw DataError("non-finite raw score");
      if (row.tails.size() != row.scores.size() || !std::is_sorted(row.tails.begin(), row.tails.end()))
        throw DataError("malformed sparse score row");
      if (!row.tails.empty() && row.tails.back() >= num_entities) throw DataError("sparse tail id out of range");
    }
  }
};

// Two ways of scaling softmax scores by the observed tails of (a, r):
//   log_scale:      P = min(1, exp(f(a,b) - S)), S = logsumexp over observed tails
//                   (over every entity when none are observed)
//   ratio_of_sums:  P = min(1, softmax(b) * n / sum_{observed c} softmax(c)),
//                   which equals log_scale times n = |observed tails|.
enum class Calibration { log_scale, ratio_of_sums };

struct CalibrationOptions {
  Calibration mode = Calibration::log_scale;
  double missing_row_truth = 0.0;  // returned for absent sparse rows
  double tail_epsilon = 0.0;       // empirical relation-tail fallback for non-members
};

namespace detail {
inline double logsumexp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}
}  // namespace detail

class CalibratedProvider final : public TruthProvider {
 public:
  // Computes the |E| x |R| normalizer cache from raw scores.
  CalibratedProvider(const KnowledgeGraph& g, std::shared_ptr<const RawScores> raw, CalibrationOptions opts = {})
      : g_(&g), raw_(std::move(raw)), opts_(opts) {
    check_dims();
    raw_->validate();
    build_cache();
  }

  // Reuses a previously saved cache.
  CalibratedProvider(const KnowledgeGraph& g, std::shared_ptr<const RawScores> raw, std::vector<double> cache,
                     CalibrationOptions opts = {})
      : g_(&g), raw_(std::move(raw)), opts_(opts), cache_(std::move(cache)) {
    check_dims();
    raw_->validate();
    if (cache_.size() != g.num_entities() * g.num_base_relations()) throw DataError("normalizer cache has the wrong size");
  }

  std::size_t num_entities() const override { return g_->num_entities(); }

  // S[a][r] for base relation index r (relation id / 2).
  const std::vector<double>& cache() const { return cache_; }
  double normalizer(EntityId a, RelationId r) const { return cache_[a * g_->num_base_relations() + base_of(r) / 2]; }

  // Optional |R| x |E| relation-tail table over every relation id, reverse
  // ones included.
  void set_relation_tail_table(std::vector<float> table) {
    if (table.size() != g_->num_relations() * g_->num_entities())
      throw DataError("relation-tail table has the wrong size");
    tail_table_ = std::move(table);
  }
  bool has_relation_tail_table() const { return !tail_table_.empty(); }

  std::uint64_t missing_rows() const { return missing_rows_.load(std::memory_order_relaxed); }

  double truth(RelationId r, EntityId a, EntityId b) const override {
    if (is_reverse(r)) std::swap(a, b);
    RelationId base = base_of(r);
    if (a >= num_entities() || b >= num_entities()) throw std::out_of_range("entity id out of range");
    if (g_->contains(a, base, b)) return 1.0;
    auto f = raw_->score(base / 2, a, b);
    if (!f) {
      missing_rows_.fetch_add(1, std::memory_order_relaxed);
      return opts_.missing_row_truth;
    }
    double s = normalizer(a, base);
    if (opts_.mode == Calibration::ratio_of_sums) {
      auto n = g_->observed_tails(a, base).size();
      if (n > 0) s -= std::log(static_cast<double>(n));
    }
    double v = std::exp(*f - s);
    return v < 1.0 ? v : 1.0;
  }

  double relation_tail(RelationId r, EntityId t) const override {
    if (!tail_table_.empty()) return std::clamp<double>(tail_table_[r * g_->num_entities() + t], 0.0, 1.0);
    auto tails = g_->tails_of_relation(r);
    return std::binary_search(tails.begin(), tails.end(), t) ? 1.0 : opts_.tail_epsilon;
  }

 private:
  void check_dims() const {
    if (!raw_) throw DataError("no raw scores");
    if (raw_->num_entities != g_->num_entities() || raw_->num_relations != g_->num_base_relations())
      throw DataError("score dimensions (" + std::to_string(raw_->num_entities) + " entities, " +
                      std::to_string(raw_->num_relations) + " relations) do not match the graph (" +
                      std::to_string(g_->num_entities()) + ", " + std::to_string(g_->num_base_relations()) + ")");
  }

  void build_cache() {
    const auto n = g_->num_entities();
    const auto nr = g_->num_base_relations();
    cache_.assign(n * nr, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> buf;
    for (std::size_t rel = 0; rel < nr; ++rel) {
      const auto r = static_cast<RelationId>(2 * rel);
      for (EntityId a = 0; a < n; ++a) {
        auto observed = g_->observed_tails(a, r);
        double& s = cache_[a * nr + rel];
        if (!raw_->sparse) {
          const float* row = raw_->dense.data() + (rel * n + a) * n;
          buf.clear();
          if (observed.empty())
            for (std::size_t d = 0; d < n; ++d) buf.push_back(row[d]);
          else
            for (EntityId d : observed) buf.push_back(row[d]);
          s = detail::logsumexp(buf);
          continue;
        }
        const auto& row = raw_->sparse_row(rel, a);
        if (!row.present) continue;
        buf.clear();
        if (!observed.empty()) {
          for (EntityId d : observed) buf.push_back(*raw_->score(rel, a, d));
        } else {
          for (float v : row.scores) buf.push_back(v);
          auto rest = n - row.tails.size();
          if (rest > 0) buf.push_back(row.floor + std::log(static_cast<double>(rest)));
        }
        s = detail::logsumexp(buf);
      }
    }
  }

  const KnowledgeGraph* g_;
  std::shared_ptr<const RawScores> raw_;
  CalibrationOptions opts_;
  std::vector<double> cache_;
  std::vector<float> tail_table_;
  mutable std::atomic<std::uint64_t> missing_rows_{0};
};

}  // namespace nlisa
