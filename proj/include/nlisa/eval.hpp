#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlisa/engine.hpp"
#include "nlisa/error.hpp"
#include "nlisa/kg.hpp"
#include "nlisa/oracle.hpp"
#include "nlisa/query.hpp"

namespace nlisa {

struct QueryInstance {
  std::string id;
  std::string type;
  std::string formula;
  std::vector<EntityId> easy;  // ascending
  std::vector<EntityId> hard;  // ascending
};

inline void to_json(nlohmann::json& j, const QueryInstance& q) {
  j = nlohmann::json{{"id", q.id}, {"type", q.type}, {"formula", q.formula}, {"easy", q.easy}, {"hard", q.hard}};
}

inline void from_json(const nlohmann::json& j, QueryInstance& q) {
  j.at("id").get_to(q.id);
  j.at("type").get_to(q.type);
  j.at("formula").get_to(q.formula);
  j.at("easy").get_to(q.easy);
  j.at("hard").get_to(q.hard);
  std::sort(q.easy.begin(), q.easy.end());
  std::sort(q.hard.begin(), q.hard.end());
}

inline void write_instances(std::ostream& out, const std::vector<QueryInstance>& qs) {
  for (const auto& q : qs) out << nlohmann::json(q).dump() << '\n';
}

inline std::vector<QueryInstance> read_instances(std::istream& in) {
  std::vector<QueryInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<QueryInstance>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad query instance: ") + e.what(), line_no);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grounding templates by random walks

namespace detail {

inline bool is_placeholder(std::string_view s) { return s.size() > 2 && s[0] == '$' && (s[1] == 'c' || s[1] == 'r'); }

// Replaces every $cN / $rN token by its binding.
inline std::string substitute(std::string_view text, const std::map<std::string, std::string>& b) {
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '$') {
      std::size_t j = i + 1;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      std::string key(text.substr(i, j - i));
      auto it = b.find(key);
      if (it == b.end()) throw std::invalid_argument("unbound placeholder " + key);
      out += it->second;
      i = j;
    } else {
      out += text[i++];
    }
  }
  return out;
}

class Grounder {
 public:
  Grounder(const FormulaPattern& pat, const KnowledgeGraph& g, std::mt19937_64& rng) : pat_(pat), g_(g), rng_(rng) {}

  // Placeholder bindings, or nullopt when this walk hit a dead end.
  std::optional<std::map<std::string, std::string>> run() {
    for (const auto& conj : pat_.conjuncts)
      if (!ground_conjunct(conj)) return std::nullopt;
    std::map<std::string, std::string> out;
    for (auto& [k, e] : ent_) out[k] = g_.symbols().entity_name(e);
    for (auto& [k, r] : rel_) out[k] = g_.symbols().relation_name(2 * r);
    return out;
  }

 private:
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng_)];
  }

  std::optional<EntityId> known(const std::string& name) const {
    if (auto it = val_.find(name); it != val_.end()) return it->second;
    if (auto it = ent_.find(name); it != ent_.end()) return it->second;
    if (!is_placeholder(name) && !pat_.is_variable(name)) {
      if (auto e = g_.symbols().find_entity(name)) return *e;
      throw std::invalid_argument("unknown entity '" + name + "' in template");
    }
    return std::nullopt;
  }

  void bind(const std::string& name, EntityId e) {
    if (is_placeholder(name))
      ent_[name] = e;
    else
      val_[name] = e;
  }

  std::vector<std::uint32_t> relation_options(const std::string& name) const {
    if (auto it = rel_.find(name); it != rel_.end()) return {it->second};
    if (!is_placeholder(name)) {
      auto r = g_.symbols().find_relation(name);
      if (!r || is_reverse(*r)) throw std::invalid_argument("template relation must be a base relation");
      return {base_of(*r) / 2};
    }
    std::vector<std::uint32_t> all(g_.num_base_relations());
    for (std::uint32_t b = 0; b < all.size(); ++b) all[b] = b;
    return all;
  }

  bool ground_conjunct(const std::vector<PatternAtom>& conj) {
    val_.clear();
    std::vector<bool> done(conj.size(), false);
    std::size_t remaining = std::count_if(conj.begin(), conj.end(), [](auto& a) { return !a.negated; });
    while (remaining > 0) {
      std::optional<std::size_t> next;
      for (std::size_t i = 0; i < conj.size() && !next; ++i)
        if (!done[i] && !conj[i].negated && (known(conj[i].head) || known(conj[i].tail))) next = i;
      if (!next) {
        // start at y, or at a variable reached from the rest only through
        // negated atoms
        std::string start(kFreeVariable);
        if (known(start)) {
          start.clear();
          for (std::size_t i = 0; i < conj.size() && start.empty(); ++i)
            if (!done[i] && !conj[i].negated)
              for (const auto& t : {conj[i].head, conj[i].tail})
                if (pat_.is_variable(t) && !known(t)) start = t;
          if (start.empty()) return false;
        }
        std::vector<EntityId> active;
        for (EntityId e = 0; e < g_.num_entities(); ++e)
          if (g_.degree(e) > 0) active.push_back(e);
        if (active.empty()) return false;
        val_[start] = pick(active);
        continue;
      }
      if (!ground_positive(conj, done, *next)) return false;
      done[*next] = true;
      --remaining;
    }
    for (std::size_t i = 0; i < conj.size(); ++i)
      if (conj[i].negated && !ground_negative(conj[i])) return false;
    return true;
  }

  // Whether binding `name` to e keeps every other pending positive atom
  // between `name` and a bound term satisfiable.
  bool compatible(const std::vector<PatternAtom>& conj, const std::vector<bool>& done, std::size_t self,
                  const std::string& name, EntityId e) const {
    for (std::size_t i = 0; i < conj.size(); ++i) {
      const auto& c = conj[i];
      if (i == self || done[i] || c.negated || (c.head == name) == (c.tail == name)) continue;
      bool head_side = c.head == name;
      auto other = known(head_side ? c.tail : c.head);
      if (!other) continue;
      auto rels = relation_options(c.relation);
      if (std::none_of(rels.begin(), rels.end(), [&](std::uint32_t b) {
            return head_side ? g_.contains(e, 2 * b, *other) : g_.contains(*other, 2 * b, e);
          }))
        return false;
    }
    return true;
  }

  bool ground_positive(const std::vector<PatternAtom>& conj, const std::vector<bool>& done, std::size_t self) {
    const auto& a = conj[self];
    auto h = known(a.head), t = known(a.tail);
    auto rels = relation_options(a.relation);
    if (h && t) {
      std::vector<std::uint32_t> ok;
      for (auto b : rels)
        if (g_.contains(*h, 2 * b, *t)) ok.push_back(b);
      if (ok.empty()) return false;
      bind_relation(a.relation, pick(ok));
      return true;
    }
    const EntityId from = h ? *h : *t;
    std::vector<std::pair<std::uint32_t, EntityId>> steps;
    for (auto b : rels) {
      RelationId r = h ? 2 * b : reverse(2 * b);
      for (auto e : g_.observed_tails(from, r))
        if (compatible(conj, done, self, h ? a.tail : a.head, e)) steps.emplace_back(b, e);
    }
    if (steps.empty()) return false;
    auto [b, e] = pick(steps);
    bind_relation(a.relation, b);
    bind(h ? a.tail : a.head, e);
    return true;
  }

  // Chooses bindings under which the negated atom is false on the graph but
  // its relation still touches the bound endpoint's neighbourhood.
  bool ground_negative(const PatternAtom& a) {
    auto h = known(a.head), t = known(a.tail);
    auto rels = relation_options(a.relation);
    if (h && t) {
      std::vector<std::uint32_t> ok;
      for (auto b : rels)
        if (!g_.contains(*h, 2 * b, *t) && !g_.observed_tails(*h, 2 * b).empty()) ok.push_back(b);
      if (ok.empty()) return false;
      bind_relation(a.relation, pick(ok));
      return true;
    }
    if (!h && !t) return false;
    const EntityId anchor = h ? *h : *t;
    std::vector<std::pair<std::uint32_t, EntityId>> options;
    for (auto b : rels) {
      // r pointing away from the anchor, and the entities reached that way
      RelationId away = h ? 2 * b : reverse(2 * b);
      const auto& range = g_.tails_of_relation(reverse(away));
      if (!std::binary_search(range.begin(), range.end(), anchor)) continue;
      for (auto e : g_.tails_of_relation(away))
        if (!g_.contains(anchor, away, e)) options.emplace_back(b, e);
    }
    if (options.empty()) return false;
    auto [b, e] = pick(options);
    bind_relation(a.relation, b);
    bind(h ? a.tail : a.head, e);
    return true;
  }

  void bind_relation(const std::string& name, std::uint32_t b) {
    if (is_placeholder(name)) rel_[name] = b;
  }

  const FormulaPattern& pat_;
  const KnowledgeGraph& g_;
  std::mt19937_64& rng_;
  std::map<std::string, EntityId> val_;
  std::map<std::string, EntityId> ent_;
  std::map<std::string, std::uint32_t> rel_;
};

}  // namespace detail

// One grounding of the template's placeholders by a random walk on g, or
// nullopt when the walk hit a dead end.
inline std::optional<std::string> ground_template(const QueryTemplate& t, const KnowledgeGraph& g, std::mt19937_64& rng) {
  auto pat = parse_pattern(t.formula);
  auto b = detail::Grounder(pat, g, rng).run();
  if (!b) return std::nullopt;
  return detail::substitute(t.formula, *b);
}

struct SampleOptions {
  std::size_t retries_per_instance = 200;
  std::size_t max_answers = 0;  // 0 = no cap on |easy| + |hard|
};

// n instances with non-empty hard answer sets. Constants are grounded on
// g_full; formulas resolve against g_observed's symbol table.
inline std::vector<QueryInstance> sample_queries(const QueryTemplate& t, const KnowledgeGraph& g_observed,
                                                 const KnowledgeGraph& g_full, std::size_t n, std::uint64_t seed,
                                                 const SampleOptions& opts = {}) {
  if (!g_observed.is_subgraph_of(g_full)) throw DataError("observed graph is not contained in the full graph");
  std::mt19937_64 rng(seed);
  std::vector<QueryInstance> out;
  std::set<std::string> seen;
  std::size_t failures = 0;
  while (out.size() < n) {
    if (failures > opts.retries_per_instance * std::max<std::size_t>(n, 1))
      throw DataError("retry budget exhausted sampling template " + t.name);
    auto text = ground_template(t, g_full, rng);
    if (!text || seen.count(*text)) {
      ++failures;
      continue;
    }
    auto f = parse_formula(*text, g_observed);
    auto full = traversal_answers(f, g_full);
    auto easy = traversal_answers(f, g_observed);
    std::vector<EntityId> hard;
    std::set_difference(full.begin(), full.end(), easy.begin(), easy.end(), std::back_inserter(hard));
    if (hard.empty() || (opts.max_answers && full.size() > opts.max_answers)) {
      ++failures;
      continue;
    }
    seen.insert(*text);
    char id[64];
    std::snprintf(id, sizeof id, "%s-%04zu", t.name.c_str(), out.size());
    out.push_back({id, t.name, *text, {easy.begin(), easy.end()}, std::move(hard)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ranking metrics

// Reciprocal rank of each hard answer against the non-answers. Ties count
// half: rank = 1 + #above + #tied / 2.
inline std::vector<double> score_ranking(const std::vector<double>& dense_scores, const QueryInstance& inst) {
  if (inst.hard.empty()) throw std::invalid_argument("query " + inst.id + " has no hard answers");
  std::vector<bool> answer(dense_scores.size(), false);
  for (auto e : inst.easy) answer.at(e) = true;
  for (auto e : inst.hard) answer.at(e) = true;
  std::vector<double> others;
  for (std::size_t e = 0; e < dense_scores.size(); ++e)
    if (!answer[e]) others.push_back(dense_scores[e]);
  std::sort(others.begin(), others.end());
  std::vector<double> rr;
  for (auto h : inst.hard) {
    double s = dense_scores[h];
    auto lo = std::lower_bound(others.begin(), others.end(), s);
    auto hi = std::upper_bound(others.begin(), others.end(), s);
    double above = static_cast<double>(others.end() - hi);
    double tied = static_cast<double>(hi - lo);
    rr.push_back(1.0 / (1.0 + above + tied / 2.0));
  }
  return rr;
}

inline std::vector<double> score_ranking(const AnswerRanking& r, const QueryInstance& inst, std::size_t num_entities) {
  return score_ranking(r.dense(num_entities), inst);
}

struct QueryMetrics {
  double mrr = 0, hit1 = 0, hit3 = 0, hit10 = 0;
};

inline QueryMetrics summarize(const std::vector<double>& rr) {
  QueryMetrics m;
  if (rr.empty()) return m;
  for (double x : rr) {
    double rank = 1.0 / x;
    m.mrr += x;
    m.hit1 += rank <= 1.0;
    m.hit3 += rank <= 3.0;
    m.hit10 += rank <= 10.0;
  }
  const double n = static_cast<double>(rr.size());
  m.mrr /= n;
  m.hit1 /= n;
  m.hit3 /= n;
  m.hit10 /= n;
  return m;
}

struct TypeMetrics {
  std::string type;
  std::size_t queries = 0;
  QueryMetrics m;
};

// Per-query metrics averaged within each type; the overall row averages
// the types.
struct MetricsReport {
  std::vector<TypeMetrics> types;
  QueryMetrics average;

  static MetricsReport build(const std::vector<std::pair<std::string, QueryMetrics>>& per_query) {
    std::map<std::string, std::vector<QueryMetrics>> by_type;
    std::vector<std::string> order;
    for (const auto& [t, m] : per_query) {
      if (!by_type.count(t)) order.push_back(t);
      by_type[t].push_back(m);
    }
    MetricsReport r;
    for (const auto& t : order) {
      TypeMetrics tm{t, by_type[t].size(), {}};
      for (const auto& m : by_type[t]) {
        tm.m.mrr += m.mrr;
        tm.m.hit1 += m.hit1;
        tm.m.hit3 += m.hit3;
        tm.m.hit10 += m.hit10;
      }
      const double n = static_cast<double>(tm.queries);
      tm.m = {tm.m.mrr / n, tm.m.hit1 / n, tm.m.hit3 / n, tm.m.hit10 / n};
      r.types.push_back(tm);
    }
    if (!r.types.empty()) {
      for (const auto& t : r.types) {
        r.average.mrr += t.m.mrr;
        r.average.hit1 += t.m.hit1;
        r.average.hit3 += t.m.hit3;
        r.average.hit10 += t.m.hit10;
      }
      const double n = static_cast<double>(r.types.size());
      r.average = {r.average.mrr / n, r.average.hit1 / n, r.average.hit3 / n, r.average.hit10 / n};
    }
    return r;
  }

  nlohmann::json to_json() const {
    auto row = [](const QueryMetrics& m) {
      return nlohmann::json{{"mrr", m.mrr}, {"hit@1", m.hit1}, {"hit@3", m.hit3}, {"hit@10", m.hit10}};
    };
    nlohmann::json j;
    j["average"] = row(average);
    for (const auto& t : types) {
      auto r = row(t.m);
      r["queries"] = t.queries;
      j["types"][t.type] = r;
    }
    return j;
  }

  // Query types as columns, metrics as rows, values in percent.
  std::string to_table() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1);
    out << std::left << std::setw(8) << "metric";
    for (const auto& t : types) out << std::right << std::setw(9) << t.type;
    out << std::right << std::setw(9) << "avg" << '\n';
    auto line = [&](const char* name, double QueryMetrics::*field) {
      out << std::left << std::setw(8) << name;
      for (const auto& t : types) out << std::right << std::setw(9) << 100.0 * (t.m.*field);
      out << std::right << std::setw(9) << 100.0 * (average.*field) << '\n';
    };
    line("MRR", &QueryMetrics::mrr);
    line("HIT@1", &QueryMetrics::hit1);
    line("HIT@3", &QueryMetrics::hit3);
    line("HIT@10", &QueryMetrics::hit10);
    out << std::left << std::setw(8) << "count";
    for (const auto& t : types) out << std::right << std::setw(9) << t.queries;
    out << '\n';
    return out.str();
  }
};

// ---------------------------------------------------------------------------
// Throughput

inline double qps_from(std::size_t queries, double seconds) {
  if (seconds <= 0) throw std::invalid_argument("elapsed time must be positive");
  return static_cast<double>(queries) / seconds;
}

// One untimed warm-up pass, then the median QPS of `repetitions` passes.
inline double measure_qps(const std::function<void(const QueryInstance&)>& run,
                          const std::vector<QueryInstance>& instances, std::size_t repetitions = 3) {
  if (instances.empty()) throw std::invalid_argument("no instances to time");
  if (repetitions == 0) throw std::invalid_argument("repetitions must be at least 1");
  for (const auto& q : instances) run(q);
  std::vector<double> rates;
  for (std::size_t r = 0; r < repetitions; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    for (const auto& q : instances) run(q);
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    rates.push_back(qps_from(instances.size(), std::max(dt.count(), 1e-9)));
  }
  std::sort(rates.begin(), rates.end());
  return rates[rates.size() / 2];
}

// ---------------------------------------------------------------------------
// Benchmark driver

struct QueryOutcome {
  std::string id;
  std::string type;
  std::vector<double> rr;
  QueryMetrics m;
};

inline std::vector<QueryOutcome> evaluate(const std::vector<QueryInstance>& instances, const KnowledgeGraph& g,
                                          const TruthProvider& p, const SearchOptions& opts,
                                          const std::function<const GlobalScorer*(const QueryInstance&)>& global = {}) {
  std::vector<QueryOutcome> out;
  for (const auto& inst : instances) {
    auto f = parse_formula(inst.formula, g);
    auto ranking = answer_formula(f, p, opts, global ? global(inst) : nullptr);
    auto rr = score_ranking(ranking, inst, p.num_entities());
    out.push_back({inst.id, inst.type, rr, summarize(rr)});
  }
  return out;
}

inline MetricsReport report_of(const std::vector<QueryOutcome>& outcomes) {
  std::vector<std::pair<std::string, QueryMetrics>> rows;
  for (const auto& o : outcomes) rows.emplace_back(o.type, o.m);
  return MetricsReport::build(rows);
}

}  // namespace nlisa
