#include <gtest/gtest.h>

#include <random>

#include "nlisa/fuzzy.hpp"

using namespace nlisa;

namespace {
constexpr TNormKind kKinds[] = {TNormKind::Godel, TNormKind::Product, TNormKind::Lukasiewicz};
}

TEST(TNorm, ClosedForms) {
  EXPECT_DOUBLE_EQ(tnorm(0.3, 0.8, TNormKind::Godel), 0.3);
  EXPECT_DOUBLE_EQ(tnorm(0.5, 0.4, TNormKind::Product), 0.2);
  EXPECT_NEAR(tnorm(0.7, 0.6, TNormKind::Lukasiewicz), 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(tnorm(0.3, 0.5, TNormKind::Lukasiewicz), 0.0);
  EXPECT_DOUBLE_EQ(tconorm(0.3, 0.8, TNormKind::Godel), 0.8);
  EXPECT_NEAR(tconorm(0.5, 0.4, TNormKind::Product), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(tconorm(0.7, 0.6, TNormKind::Lukasiewicz), 1.0);
  EXPECT_DOUBLE_EQ(negate(0.25), 0.75);
}

TEST(TNorm, RejectsValuesOutsideUnitInterval) {
  EXPECT_THROW(tnorm(1.2, 0.5, TNormKind::Product), std::domain_error);
  EXPECT_THROW(tconorm(0.5, -0.1, TNormKind::Godel), std::domain_error);
  EXPECT_THROW(negate(2.0), std::domain_error);
  EXPECT_THROW(tnorm(std::nan(""), 0.5, TNormKind::Godel), std::domain_error);
}

TEST(TNorm, ParseKind) {
  EXPECT_EQ(parse_tnorm("product"), TNormKind::Product);
  EXPECT_EQ(parse_tnorm("min"), TNormKind::Godel);
  EXPECT_EQ(parse_tnorm(to_string(TNormKind::Lukasiewicz)), TNormKind::Lukasiewicz);
  EXPECT_THROW(parse_tnorm("hamacher"), std::invalid_argument);
}

TEST(TNorm, Axioms) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto k : kKinds) {
    for (int i = 0; i < 2000; ++i) {
      double a = u(rng), b = u(rng), c = u(rng);
      EXPECT_NEAR(tnorm(a, b, k), tnorm(b, a, k), 1e-12);
      EXPECT_NEAR(tnorm(a, tnorm(b, c, k), k), tnorm(tnorm(a, b, k), c, k), 1e-12);
      EXPECT_NEAR(tnorm(a, 1.0, k), a, 1e-12);
      double lo = std::min(b, c), hi = std::max(b, c);
      EXPECT_LE(tnorm(a, lo, k), tnorm(a, hi, k) + 1e-12);
      EXPECT_NEAR(tconorm(a, b, k), 1.0 - tnorm(1.0 - a, 1.0 - b, k), 1e-12);
      EXPECT_NEAR(tconorm(a, 0.0, k), a, 1e-12);
      EXPECT_LE(tnorm(a, b, k), std::min(a, b) + 1e-12);
    }
  }
}

TEST(FuzzyVector, DomainMustBeStrictlyAscending) {
  EXPECT_NO_THROW(FuzzyVector({1, 4, 9}));
  EXPECT_THROW(FuzzyVector({4, 1}), std::invalid_argument);
  EXPECT_THROW(FuzzyVector({1, 1}), std::invalid_argument);
  EXPECT_THROW(FuzzyVector({1, 2}, {0.5}), std::invalid_argument);
  EXPECT_THROW(FuzzyVector({1, 2}, {0.5, 1.5}), std::domain_error);
}

TEST(FuzzyVector, FreshVectorIsAllOnesAndConjoins) {
  FuzzyVector v({2, 5, 7});
  EXPECT_EQ(v.values, (std::vector<double>{1, 1, 1}));
  v.conjoin({0.5, 0.0, 1.0}, TNormKind::Product);
  v.conjoin({0.5, 1.0, 0.25}, TNormKind::Product);
  EXPECT_EQ(v.values, (std::vector<double>{0.25, 0.0, 0.25}));
  EXPECT_EQ(v.index_of(5), 1u);
  EXPECT_EQ(v.index_of(3), FuzzyVector::npos);
}

TEST(MaxReduce, BothAxesWithFirstMaximumOnTies) {
  ScoreMatrix m({10, 11}, {20, 21, 22});
  double vals[] = {0.1, 0.7, 0.7, 0.9, 0.2, 0.7};
  std::copy(std::begin(vals), std::end(vals), m.values.begin());
  auto per_row = max_reduce(m, Axis::cols);
  EXPECT_EQ(per_row.vector.domain, (std::vector<EntityId>{10, 11}));
  EXPECT_EQ(per_row.vector.values, (std::vector<double>{0.7, 0.9}));
  EXPECT_EQ(per_row.argmax, (std::vector<std::size_t>{1, 0}));
  auto per_col = max_reduce(m, Axis::rows);
  EXPECT_EQ(per_col.vector.domain, (std::vector<EntityId>{20, 21, 22}));
  EXPECT_EQ(per_col.vector.values, (std::vector<double>{0.9, 0.7, 0.7}));
  EXPECT_EQ(per_col.argmax, (std::vector<std::size_t>{1, 0, 0}));
  EXPECT_THROW(max_reduce(ScoreMatrix({}, {1}), Axis::rows), std::invalid_argument);
}

TEST(ScoreMatrix, ConjoinShapesMustMatch) {
  ScoreMatrix a({1, 2}, {3}, 0.5), b({1, 2}, {3}, 0.5), c({1}, {3}, 0.5);
  a.conjoin(b, TNormKind::Product);
  EXPECT_EQ(a.values, (std::vector<double>{0.25, 0.25}));
  EXPECT_THROW(a.conjoin(c, TNormKind::Product), std::invalid_argument);
}
