#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nlisa/kg.hpp"
#include "nlisa/truth.hpp"

// Seeded generators for test and benchmark graphs.

namespace nlisa {

struct GraphSplit {
  KnowledgeGraph full;
  KnowledgeGraph observed;
};

struct TypedGraphOptions {
  std::size_t entities = 2000;
  std::size_t min_type_size = 50;
  std::size_t max_type_size = 250;
  std::size_t relations = 24;
  double mean_out_degree = 2.5;  // per head, for each relation leaving its type
  double holdout = 0.15;         // fraction of triples missing from the observed graph
  double closure = 0.3;          // probability of closing each two-step path of a relation group
  std::uint64_t seed = 7;
};

// Entities are partitioned into types; every relation links one head type to
// one tail type, with popularity-skewed tails. Each group of three relations
// spans a type triangle and some of its paths are closed, so cyclic patterns
// occur. Names are "t<type>_<n>" and "rel<k>".
inline GraphSplit typed_graph(const TypedGraphOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::vector<std::size_t> type_of(o.entities);
  std::vector<std::vector<EntityId>> members;
  for (std::size_t e = 0; e < o.entities;) {
    std::size_t size = std::uniform_int_distribution<std::size_t>(o.min_type_size, o.max_type_size)(rng);
    size = std::min(size, o.entities - e);
    members.emplace_back();
    for (std::size_t i = 0; i < size; ++i, ++e) {
      type_of[e] = members.size() - 1;
      members.back().push_back(static_cast<EntityId>(e));
    }
  }
  // shuffle so ids do not encode types
  std::vector<EntityId> perm(o.entities);
  for (EntityId i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  Symbols sym;
  std::vector<std::size_t> counter(members.size(), 0);
  std::vector<std::string> names(o.entities);
  for (std::size_t e = 0; e < o.entities; ++e) {
    auto t = type_of[e];
    names[e] = "t" + std::to_string(t) + "_" + std::to_string(counter[t]++);
  }
  for (auto e : perm) sym.add_entity(names[e]);
  auto id_of = [&](std::size_t e) { return *sym.find_entity(names[e]); };

  std::vector<Triple> triples;
  std::uniform_int_distribution<std::size_t> pick_type(0, members.size() - 1);
  std::bernoulli_distribution close(o.closure);
  // Relations come in groups of three over types A->B, B->C and A->C.
  std::vector<std::size_t> group_types;
  std::vector<std::vector<std::vector<EntityId>>> out;  // [relation][head] -> tails, by raw index
  for (std::size_t r = 0; r < o.relations; ++r) {
    auto rel = sym.add_relation("rel" + std::to_string(r));
    if (r % 3 == 0) group_types = {pick_type(rng), pick_type(rng), pick_type(rng)};
    static constexpr std::size_t from[] = {0, 1, 0}, to[] = {1, 2, 2};
    const auto& heads = members[group_types[from[r % 3]]];
    const auto& tails = members[group_types[to[r % 3]]];
    // Zipf-like tail popularity
    std::vector<double> w(tails.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / static_cast<double>(i + 1);
    std::shuffle(w.begin(), w.end(), rng);
    std::discrete_distribution<std::size_t> tail_dist(w.begin(), w.end());
    std::poisson_distribution<int> deg(o.mean_out_degree);
    out.emplace_back(o.entities);
    auto add = [&](EntityId h, EntityId t) {
      out.back()[h].push_back(t);
      triples.push_back({id_of(h), rel, id_of(t)});
    };
    for (auto h : heads) {
      int d = deg(rng);
      for (int k = 0; k < d; ++k) add(h, tails[tail_dist(rng)]);
    }
    if (r % 3 == 2)  // triadic closure of A->B->C paths
      for (auto h : heads)
        for (auto b : out[r - 2][h])
          for (auto c : out[r - 1][b])
            if (close(rng)) add(h, c);
  }
  std::bernoulli_distribution keep(1.0 - o.holdout);
  std::vector<Triple> observed;
  for (const auto& t : triples)
    if (keep(rng)) observed.push_back(t);
  return {KnowledgeGraph(sym, triples), KnowledgeGraph(sym, observed)};
}

struct RandomGraphOptions {
  std::size_t entities = 20;
  std::size_t relations = 3;
  double density = 0.08;  // probability of each (h, r, t) in the full graph
  double holdout = 0.25;
  std::uint64_t seed = 1;
};

// Erdos-Renyi style multigraph over "e<n>" entities and "r<k>" relations.
inline GraphSplit random_graph(const RandomGraphOptions& o) {
  std::mt19937_64 rng(o.seed);
  Symbols sym;
  for (std::size_t e = 0; e < o.entities; ++e) sym.add_entity("e" + std::to_string(e));
  for (std::size_t r = 0; r < o.relations; ++r) sym.add_relation("r" + std::to_string(r));
  std::bernoulli_distribution edge(o.density), keep(1.0 - o.holdout);
  std::vector<Triple> full, observed;
  for (EntityId h = 0; h < o.entities; ++h)
    for (std::size_t r = 0; r < o.relations; ++r)
      for (EntityId t = 0; t < o.entities; ++t)
        if (edge(rng)) {
          Triple tr{h, static_cast<RelationId>(2 * r), t};
          full.push_back(tr);
          if (keep(rng)) observed.push_back(tr);
        }
  return {KnowledgeGraph(sym, full), KnowledgeGraph(sym, observed)};
}

// Dense raw scores that prefer triples of `truth_graph`: signal for true
// triples plus standard normal noise.
inline RawScores correlated_scores(const KnowledgeGraph& truth_graph, double signal, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto n = truth_graph.num_entities(), rb = truth_graph.num_base_relations();
  std::vector<float> v(rb * n * n);
  for (std::size_t r = 0; r < rb; ++r)
    for (EntityId a = 0; a < n; ++a)
      for (EntityId b = 0; b < n; ++b) {
        double x = noise(rng);
        if (truth_graph.contains(a, static_cast<RelationId>(2 * r), b)) x += signal;
        v[(r * n + a) * n + b] = static_cast<float>(x);
      }
  return RawScores::make_dense(n, rb, std::move(v));
}

}  // namespace nlisa
