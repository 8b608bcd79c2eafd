#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "gfflab/rng.hpp"

using namespace gfflab;

TEST(Rng, ValuesArePureFunctionsOfKeyAndCounter) {
  EXPECT_EQ(rng::bits(7, 3), rng::bits(7, 3));
  EXPECT_NE(rng::bits(7, 3), rng::bits(7, 4));
  EXPECT_NE(rng::bits(7, 3), rng::bits(8, 3));
  EXPECT_EQ(rng::normal(11, 5), rng::normal(11, 5));
}

TEST(Rng, StreamMatchesCounterAccess) {
  rng::Stream s(42);
  for (std::uint64_t c = 0; c < 10; ++c) EXPECT_EQ(s.uniform(), rng::uniform(42, c));
}

TEST(Rng, DerivedSeedsDependOnWholePath) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a)
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(rng::derive(1, a, b));
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NE(rng::derive(1, 2, 3), rng::derive(1, 3, 2));
  EXPECT_NE(rng::derive(1, 2), rng::derive(1, 2, 0));
}

TEST(Rng, UniformMomentsWithinMonteCarloBand) {
  const int n = 200000;
  double sum = 0, sumsq = 0;
  for (int k = 0; k < n; ++k) {
    const double u = rng::uniform(3, k);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sumsq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sumsq / n, 1.0 / 3, 4 * std::sqrt((1.0 / 5 - 1.0 / 9) / n));
}

TEST(Rng, NormalMomentsWithinMonteCarloBand) {
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int k = 0; k < n; ++k) {
    const double z = rng::normal(9, k);
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4 * std::sqrt(96.0 / n));
}

TEST(Rng, NeighbouringCountersAreUncorrelated) {
  const int n = 100000;
  double s = 0;
  for (int k = 0; k < n; ++k) s += rng::normal(5, k) * rng::normal(5, k + 1);
  EXPECT_NEAR(s / n, 0.0, 4 / std::sqrt(n));
}
