#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace nlisa;

namespace {

// Exactly one grounding (x1=b, x2=e, y=d) satisfies the triangle query.
KnowledgeGraph triangle_kg() {
  return load_triples(std::string_view(
      "a\tGraduate\tc\nb\tGraduate\td\na\tGraduate\tb\nb\tMarried\tc\ne\tMarried\td\nc\tMarried\tf\n"));
}

constexpr const char* kTriangle = "EX x1, x2. !Graduate(x1, x2) & Graduate(x1, y) & Married(x2, y)";

DomainAssignment domains_with_y(const QueryGraph& q, std::size_t n, std::vector<EntityId> y) {
  auto d = DomainAssignment::full(q, n);
  d.domains["y"] = std::move(y);
  return d;
}

}  // namespace

TEST(RemoveConstNode, FoldsConstantEdges) {
  auto g = fixtures::f1();
  ExactProvider p(g, 0.0);
  auto b = fixtures::id(g, "b"), c = fixtures::id(g, "c"), d = fixtures::id(g, "d");
  for (bool neg : {false, true}) {
    auto q = parse_formula(neg ? "!r(a, y)" : "r(a, y)", g).conjuncts[0];
    SearchState st(q, domains_with_y(q, g.num_entities(), {b, c, d}), TNormKind::Product);
    remove_const_node(st, p);
    EXPECT_EQ(st.free_vector().values, neg ? (std::vector<double>{0, 0, 1}) : (std::vector<double>{1, 1, 0}));
    EXPECT_FALSE(st.has_const_edges());
  }
}

TEST(RemoveConstNode, ConstantAsTailUsesReverse) {
  auto g = fixtures::f1();
  ExactProvider p(g, 0.0);
  auto q = parse_formula("s(y, d)", g).conjuncts[0];
  SearchState st(q, DomainAssignment::full(q, g.num_entities()), TNormKind::Godel);
  remove_const_node(st, p);
  EXPECT_EQ(st.free_vector().values, (std::vector<double>{0, 1, 1, 0, 0}));
}

TEST(RemoveConstNode, NoConstantsIsNoOp) {
  auto g = fixtures::f1();
  ExactProvider p(g, 0.0);
  auto q = parse_formula("EX x. r(x, y)", g).conjuncts[0];
  SearchState st(q, DomainAssignment::full(q, g.num_entities()), TNormKind::Product);
  remove_const_node(st, p);
  EXPECT_EQ(st.free_vector().values, std::vector<double>(5, 1.0));
  EXPECT_EQ(st.fuzzy(1).values, std::vector<double>(5, 1.0));
}

TEST(RemoveLeafNode, TwoHopChain) {
  auto g = fixtures::f1();
  ExactProvider p(g, 0.0);
  auto q = parse_formula("EX x. r(a, x) & s(x, y)", g).conjuncts[0];
  SearchState st(q, DomainAssignment::full(q, g.num_entities()), TNormKind::Product);
  remove_const_node(st, p);
  auto x = st.index("x");
  ASSERT_TRUE(st.is_leaf(x));
  remove_leaf_node(st, x, p);
  EXPECT_EQ(st.free_vector().values, (std::vector<double>{0, 0, 0, 1, 1}));
  EXPECT_TRUE(st.removed(x));
  EXPECT_THROW(remove_leaf_node(st, x, p), std::logic_error);
}

TEST(RemoveLeafNode, ZeroMembershipAnnihilates) {
  auto g = fixtures::f1();
  ExactProvider p(g, 0.3);
  auto q = parse_formula("EX x. s(x, y)", g).conjuncts[0];
  for (auto k : {TNormKind::Godel, TNormKind::Product, TNormKind::Lukasiewicz}) {
    SearchState st(q, DomainAssignment::full(q, g.num_entities()), k);
    std::fill(st.fuzzy(1).values.begin(), st.fuzzy(1).values.end(), 0.0);
    remove_leaf_node(st, 1, p);
    EXPECT_EQ(st.free_vector().values, std::vector<double>(5, 0.0));
  }
}

TEST(RemoveLeafNode, ContradictoryParallelEdges) {
  auto g = fixtures::f1();
  ExactProvider p(g, 0.0);
  auto q = parse_formula("EX x. s(x, y) & !s(x, y)", g).conjuncts[0];
  SearchState st(q, DomainAssignment::full(q, g.num_entities()), TNormKind::Product);
  remove_leaf_node(st, 1, p);
  EXPECT_EQ(st.free_vector().values, std::vector<double>(5, 0.0));
}

TEST(RemoveLeafNode, NonLeafIsRejected) {
  auto g = triangle_kg();
  ExactProvider p(g, 0.0);
  auto q = parse_formula(kTriangle, g).conjuncts[0];
  SearchState st(q, DomainAssignment::full(q, g.num_entities()), TNormKind::Product);
  EXPECT_FALSE(st.next_leaf().has_value());
  EXPECT_THROW(remove_leaf_node(st, 1, p), std::logic_error);
  EXPECT_THROW(remove_leaf_node(st, 0, p), std::logic_error);
}

TEST(LocalOptimize, TriangleHasSingleAnswer) {
  auto g = triangle_kg();
  ExactProvider p(g, 0.0);
  auto f = parse_formula(kTriangle, g);
  EngineConfig cfg;
  cfg.record_witnesses = true;
  auto r = answer_conjunct(f.conjuncts[0], DomainAssignment::full(f.conjuncts[0], g.num_entities()), p, cfg);
  auto d = fixtures::id(g, "d");
  for (std::size_t i = 0; i < r.domain.size(); ++i) EXPECT_EQ(r.scores[i], r.domain[i] == d ? 1.0 : 0.0);
  EXPECT_EQ(r.witness_variables, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_EQ(r.witnesses[d], (std::vector<EntityId>{fixtures::id(g, "b"), fixtures::id(g, "e")}));
  auto bf = brute_force(f.conjuncts[0], p, TNormKind::Product);
  for (EntityId e = 0; e < g.num_entities(); ++e) EXPECT_EQ(bf.optimum[e], r.score_of(e));
}

TEST(LocalOptimize, RequiresIncidentEdges) {
  auto g = triangle_kg();
  ExactProvider p(g, 0.0);
  auto q = parse_formula("EX x. Married(x, y) & Married(x, x)", g).conjuncts[0];
  SearchState st(q, DomainAssignment::full(q, g.num_entities()), TNormKind::Product);
  remove_const_node(st, p);
  remove_leaf_node(st, 1, p);
  EXPECT_THROW(local_optimize(st, 1, p), std::logic_error);
  EXPECT_THROW(local_optimize(st, 0, p), std::logic_error);
}

TEST(LocalOptimize, SingleVariableMatchesLeafRemoval) {
  auto split = random_graph({15, 2, 0.2, 0.3, 4});
  auto raw = std::make_shared<const RawScores>(correlated_scores(split.full, 2.0, 5));
  CalibratedProvider p(split.observed, raw);
  auto q = parse_formula("EX x. r0(e1, x) & r1(x, y) & !r0(x, y)", split.observed).conjuncts[0];
  auto dom = DomainAssignment::full(q, 15);
  SearchState a(q, dom, TNormKind::Product), b(q, dom, TNormKind::Product);
  remove_const_node(a, p);
  remove_const_node(b, p);
  remove_leaf_node(a, 1, p);
  local_optimize(b, 1, p);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_NEAR(a.free_vector().values[i], b.free_vector().values[i], 1e-12);
}

TEST(LocalOptimize, ConstantObjectiveTiesPickSmallestId) {
  auto g = load_triples(std::string_view("a\tr\tb\nb\tr\ta\na\tr\ta\nb\tr\tb\n"));
  ExactProvider p(g, 0.0);
  auto q = parse_formula("EX x1, x2. r(x1, y) & r(x2, y) & r(x1, x2)", g).conjuncts[0];
  EngineConfig cfg;
  cfg.record_witnesses = true;
  auto r = answer_conjunct(q, DomainAssignment::full(q, 2), p, cfg);
  EXPECT_EQ(r.scores, (std::vector<double>{1, 1}));
  for (const auto& w : r.witnesses) EXPECT_EQ(w, (std::vector<EntityId>{0, 0}));
}

TEST(AnswerConjunct, OneProjectionAndUnsatisfiable) {
  auto g = fixtures::f1();
  ExactProvider p(g, 0.0);
  auto q = parse_formula("r(a, y)", g).conjuncts[0];
  auto r = answer_conjunct(q, DomainAssignment::full(q, 5), p);
  EXPECT_EQ(r.scores, (std::vector<double>{0, 1, 1, 0, 0}));
  auto none = parse_formula("EX x. r(a, x) & r(x, y)", g).conjuncts[0];
  auto z = answer_conjunct(none, DomainAssignment::full(none, 5), p);
  EXPECT_EQ(z.scores, std::vector<double>(5, 0.0));
  auto ground = parse_formula("r(a, y) & r(b, a)", g).conjuncts[0];
  EXPECT_EQ(answer_conjunct(ground, DomainAssignment::full(ground, 5), p).scores, std::vector<double>(5, 0.0));
}

TEST(AnswerFormula, UnionOfProjections) {
  auto g = fixtures::f1();
  ExactProvider p(g, 0.0);
  auto r = answer_formula(parse_formula("r(a, y) | s(c, y)", g), p);
  auto expected = traversal_answers(parse_formula("r(a, y) | s(c, y)", g), g);
  for (EntityId e = 0; e < 5; ++e) EXPECT_EQ(r.score_of(e), expected.count(e) ? 1.0 : 0.0);
  auto single = answer_formula(parse_formula("r(a, y)", g), p);
  auto conj = answer_conjunct(parse_formula("r(a, y)", g).conjuncts[0], DomainAssignment::full(parse_formula("r(a, y)", g).conjuncts[0], 5), p);
  EXPECT_EQ(single.scores, conj.scores);
}

TEST(AnswerFormula, DuplicateConjunctsKeepOrder) {
  auto split = random_graph({20, 2, 0.15, 0.3, 8});
  auto raw = std::make_shared<const RawScores>(correlated_scores(split.full, 2.0, 1));
  CalibratedProvider p(split.observed, raw);
  auto one = answer_formula(parse_formula("EX x. r0(e2, x) & r1(x, y)", split.observed), p);
  auto two = answer_formula(parse_formula("EX x. (r0(e2, x) & r1(x, y)) | (r0(e2, x) & r1(x, y))", split.observed), p);
  ASSERT_EQ(one.domain, two.domain);
  for (std::size_t i = 0; i < one.scores.size(); ++i)
    for (std::size_t j = 0; j < one.scores.size(); ++j)
      if (one.scores[i] < one.scores[j]) {
        EXPECT_LE(two.scores[i], two.scores[j]);
      }
}

TEST(Engine, WitnessesReproduceScoresOnCyclicQueries) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto split = random_graph({12, 3, 0.15, 0.3, rng()});
    auto raw = std::make_shared<const RawScores>(correlated_scores(split.full, 2.0, rng()));
    CalibratedProvider p(split.observed, raw);
    for (const char* text : {"EX x1, x2. r0(x1, y) & r1(x2, y) & r2(x1, x2)",
                             "EX x1, x2. r0(e1, x1) & r1(e2, x2) & r2(x1, y) & r0(x2, y) & r1(x1, x2) & !r2(x1, x2)"}) {
      auto q = parse_formula(text, split.observed).conjuncts[0];
      for (auto k : {TNormKind::Godel, TNormKind::Product, TNormKind::Lukasiewicz}) {
        EngineConfig cfg{k, 5, true, 1};
        auto r = answer_conjunct(q, DomainAssignment::full(q, 12), p, cfg);
        auto bf = brute_force(q, p, k);
        for (std::size_t s = 0; s < r.domain.size(); ++s) {
          EXPECT_NEAR(r.scores[s], evaluate_assignment(q, p, k, r.domain[s], r.witnesses[s]), 1e-12);
          EXPECT_LE(r.scores[s], bf.optimum[r.domain[s]] + 1e-12);
        }
      }
    }
  }
}

TEST(Engine, AcyclicMatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto split = random_graph({12, 3, 0.15, 0.3, rng()});
    auto raw = std::make_shared<const RawScores>(correlated_scores(split.full, 2.0, rng()));
    CalibratedProvider p(split.observed, raw);
    for (const char* text : {"EX x1, x2. r0(e1, x1) & r1(x1, x2) & r2(x2, y)",
                             "EX x1. r0(e1, x1) & r1(x1, y) & !r2(x1, y) & r0(e3, y)",
                             "EX x1, x2, x3. r0(x1, y) & r1(x2, y) & r2(x3, x1) & !r0(e4, x3)"}) {
      auto q = parse_formula(text, split.observed).conjuncts[0];
      ASSERT_FALSE(is_cyclic(q));
      for (auto k : {TNormKind::Godel, TNormKind::Product, TNormKind::Lukasiewicz}) {
        auto r = answer_conjunct(q, DomainAssignment::full(q, 12), p, {k, 512, false, 1});
        auto bf = brute_force(q, p, k);
        for (EntityId e = 0; e < 12; ++e) EXPECT_NEAR(r.score_of(e), bf.optimum[e], 1e-9) << text;
      }
    }
  }
}

TEST(Engine, BlocksAndWorkersDoNotChangeResults) {
  auto split = random_graph({30, 3, 0.1, 0.3, 12});
  auto raw = std::make_shared<const RawScores>(correlated_scores(split.full, 2.0, 2));
  CalibratedProvider p(split.observed, raw);
  auto q = parse_formula("EX x1, x2. r0(e1, x1) & r1(x1, y) & r2(x2, y) & r0(x1, x2)", split.observed).conjuncts[0];
  auto dom = DomainAssignment::full(q, 30);
  auto base = answer_conjunct(q, dom, p, {TNormKind::Product, 512, true, 1});
  for (std::size_t block : {1, 7, 64})
    for (unsigned workers : {1u, 4u}) {
      auto r = answer_conjunct(q, dom, p, {TNormKind::Product, block, true, workers});
      EXPECT_EQ(r.scores, base.scores);
      EXPECT_EQ(r.witnesses, base.witnesses);
    }
}

TEST(Engine, GrowingDomainsNeverLowersAcyclicScores) {
  auto split = random_graph({20, 3, 0.12, 0.3, 31});
  auto raw = std::make_shared<const RawScores>(correlated_scores(split.full, 2.0, 9));
  CalibratedProvider p(split.observed, raw);
  auto q = parse_formula("EX x1, x2. r0(e1, x1) & r1(x1, x2) & r2(x2, y) & !r1(e0, y)", split.observed).conjuncts[0];
  AnswerRanking prev;
  for (std::size_t k : {3, 6, 10, 20}) {
    auto d = cut_domain(q, k, 20, p);
    auto r = answer_conjunct(q, d, p);
    if (!prev.domain.empty()) {
      for (std::size_t i = 0; i < r.domain.size(); ++i) EXPECT_GE(r.scores[i] + 1e-15, prev.score_of(r.domain[i]));
    }
    prev = r;
  }
}

TEST(Engine, EmptyDomainIsRejected) {
  auto g = fixtures::f1();
  auto q = parse_formula("r(a, y)", g).conjuncts[0];
  DomainAssignment d;
  d.domains["y"] = {};
  EXPECT_THROW(SearchState(q, d, TNormKind::Product), std::invalid_argument);
}
