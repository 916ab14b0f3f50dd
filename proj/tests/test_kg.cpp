#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

using namespace nlisa;

TEST(KnowledgeGraph, LoadsFixtureWithReverseClosure) {
  auto g = fixtures::f1();
  EXPECT_EQ(g.num_entities(), 5u);
  EXPECT_EQ(g.num_relations(), 4u);
  EXPECT_EQ(g.num_base_relations(), 2u);
  EXPECT_EQ(g.num_triples(), 10u);
  for (const auto& t : g.all_triples()) EXPECT_TRUE(g.contains(t.tail, reverse(t.relation), t.head));
}

TEST(KnowledgeGraph, EmptyStream) {
  auto g = load_triples(std::string_view(""));
  EXPECT_EQ(g.num_entities(), 0u);
  EXPECT_EQ(g.num_relations(), 0u);
  EXPECT_EQ(g.num_triples(), 0u);
}

TEST(KnowledgeGraph, MalformedLineReportsLineNumber) {
  try {
    load_triples(std::string_view("a\tr\tb\n\na r\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 3u);
  }
}

TEST(KnowledgeGraph, DuplicatesAreDropped) {
  auto g = load_triples(std::string_view("a\tr\tb\na\tr\tb\n# comment\na\tr\tb\n"));
  EXPECT_EQ(g.num_triples(), 2u);
  EXPECT_EQ(g.base_triples().size(), 1u);
}

TEST(KnowledgeGraph, StrictModeRejectsUnknownSymbols) {
  auto g = fixtures::f1();
  EXPECT_NO_THROW(load_triples(std::string_view("a\tr\tb\n"), SymbolMode::strict, g.symbols()));
  EXPECT_THROW(load_triples(std::string_view("a\tr\tz\n"), SymbolMode::strict, g.symbols()), DataError);
  EXPECT_THROW(load_triples(std::string_view("a\tq\tb\n"), SymbolMode::strict, g.symbols()), DataError);
}

TEST(KnowledgeGraph, ObservedTails) {
  auto g = fixtures::f1();
  auto a = fixtures::id(g, "a"), c = fixtures::id(g, "c");
  auto r = *g.symbols().find_relation("r"), s = *g.symbols().find_relation("s");
  auto tails = g.observed_tails(a, r);
  std::vector<EntityId> got(tails.begin(), tails.end());
  EXPECT_EQ(got, (std::vector<EntityId>{fixtures::id(g, "b"), c}));
  EXPECT_TRUE(g.observed_tails(fixtures::id(g, "e"), s).empty());
  auto d = fixtures::id(g, "d");
  auto heads = g.observed_tails(d, reverse(s));
  EXPECT_EQ(std::vector<EntityId>(heads.begin(), heads.end()), (std::vector<EntityId>{fixtures::id(g, "b"), c}));
  EXPECT_THROW(g.observed_tails(99, r), std::out_of_range);
  EXPECT_THROW(g.observed_tails(a, 17), std::out_of_range);
}

TEST(KnowledgeGraph, TailsOfRelationIsUnionOverHeads) {
  auto g = fixtures::f1();
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    std::set<EntityId> expect;
    for (EntityId h = 0; h < g.num_entities(); ++h)
      for (auto t : g.observed_tails(h, r)) expect.insert(t);
    auto all = g.tails_of_relation(r);
    EXPECT_EQ(std::vector<EntityId>(all.begin(), all.end()), std::vector<EntityId>(expect.begin(), expect.end()));
  }
}

TEST(KnowledgeGraph, ReverseIsInvolution) {
  for (RelationId r = 0; r < 64; ++r) {
    EXPECT_EQ(reverse(reverse(r)), r);
    EXPECT_NE(reverse(r), r);
    EXPECT_EQ(base_of(r), base_of(reverse(r)));
  }
}

TEST(KnowledgeGraph, ReverseRelationNames) {
  auto g = fixtures::f1();
  auto r = *g.symbols().find_relation("r");
  EXPECT_EQ(*g.symbols().find_relation("r^-1"), reverse(r));
  EXPECT_EQ(g.symbols().relation_name(reverse(r)), "r^-1");
}

TEST(KnowledgeGraph, SaveLoadRoundTrip) {
  auto g = fixtures::f1();
  std::ostringstream out;
  save_triples(g, out);
  auto h = load_triples(std::string_view(out.str()));
  EXPECT_TRUE(g.is_subgraph_of(h));
  EXPECT_TRUE(h.is_subgraph_of(g));
}

TEST(KnowledgeGraph, SubgraphNeedsSameSymbols) {
  auto g = fixtures::f1();
  auto part = load_triples(std::string_view("a\tr\tb\n"), SymbolMode::strict, g.symbols());
  EXPECT_TRUE(part.is_subgraph_of(g));
  EXPECT_FALSE(g.is_subgraph_of(part));
  auto other = load_triples(std::string_view("a\tr\tb\n"));
  EXPECT_FALSE(other.is_subgraph_of(g));
}
