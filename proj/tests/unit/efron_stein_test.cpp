#include <gtest/gtest.h>

#include <cmath>

#include "gfflab/efron_stein.hpp"
#include "gfflab/errors.hpp"
#include "gfflab/rng.hpp"

using namespace gfflab;

namespace {

struct Instance {
  GridSpec g{24, 24};
  DomainMask V = DomainMask::rect(g, 2, 2, 21, 21);
  FieldSample field = sample_zero_boundary(g, 5);
  Vertex z{4, 6};
  Vertex w{19, 17};
};

}  // namespace

TEST(EfronStein, NoNoiseMeansNoVariance) {
  Instance in;
  const auto rep = efron_stein_experiment(MetricLaw{0.4, 0.0}, in.field, in.z, in.w, in.V, {8, 4}, 3, 1, 1);
  ASSERT_EQ(rep.levels.size(), 2u);
  for (const auto& l : rep.levels) {
    EXPECT_EQ(l.proxy, 0.0);
    EXPECT_EQ(l.bound_violations, 0u);
  }
}

TEST(EfronStein, PartitionAndBoundOnRandomInstances) {
  Instance in;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto rep = efron_stein_experiment(MetricLaw{0.4, 0.5}, in.field, in.z, in.w, in.V, {8, 4, 2}, 4, seed, 1);
    EXPECT_TRUE(rep.partition_exact());
    EXPECT_TRUE(rep.bound_holds());
    for (const auto& l : rep.levels) {
      EXPECT_NEAR(l.path_length, l.distance, 1e-13 * l.distance);
      double sum = 0.0;
      std::size_t vertices = 0;
      for (const auto& s : l.squares) {
        sum += s.path_length;
        vertices += s.vertices;
        EXPECT_GE(s.min_slack, 0.0);
      }
      EXPECT_NEAR(sum, l.distance, 1e-12 * l.distance);
      EXPECT_EQ(vertices, static_cast<std::size_t>(in.V.count()));
      EXPECT_GT(l.proxy, 0.0);
      EXPECT_GE(l.theta.minCoeff(), 0.0);
      EXPECT_LT(l.theta.maxCoeff(), 1.0);
    }
  }
}

TEST(EfronStein, SquareVarianceMatchesDirectResampling) {
  Instance in;
  const MetricLaw law{0.4, 0.5};
  const std::uint64_t seed = 9;
  const auto rep = efron_stein_experiment(law, in.field, in.z, in.w, in.V, {6}, 3, seed, 1);
  const auto& l = rep.levels[0];
  const Eigen::ArrayXXd base_noise = noise_field(in.g, rng::derive(seed, 0));
  const double d0 = distance(law.build(in.field, base_noise), in.z, in.w, in.V);
  EXPECT_EQ(d0, l.distance);
  for (std::size_t s = 0; s < l.squares.size(); s += 7) {
    double sum = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
      Eigen::ArrayXXd noise = base_noise;
      const auto key = rng::derive(seed, 2, 0, s, q);
      for (const Vertex& v : in.V.vertices())
        if (square_containing(in.g.point(v), l.theta, 6.0) == l.squares[s].key)
          noise(v.i, v.j) = rng::normal(key, static_cast<std::uint64_t>(in.g.index(v)));
      const double diff = distance(law.build(in.field, noise), in.z, in.w, in.V) - d0;
      sum += diff * diff;
    }
    EXPECT_NEAR(l.squares[s].mean_sq_diff, sum / 3, 1e-12 * (1 + sum));
  }
}

TEST(EfronStein, ThreadCountDoesNotChangeResults) {
  Instance in;
  const auto a = efron_stein_experiment(MetricLaw{0.4, 0.5}, in.field, in.z, in.w, in.V, {6}, 2, 4, 1);
  const auto b = efron_stein_experiment(MetricLaw{0.4, 0.5}, in.field, in.z, in.w, in.V, {6}, 2, 4, 3);
  EXPECT_EQ(a.levels[0].proxy, b.levels[0].proxy);
}

TEST(EfronStein, RejectsBadInputs) {
  Instance in;
  const MetricLaw law{0.4, 0.5};
  EXPECT_THROW(efron_stein_experiment(law, in.field, in.z, in.w, in.V, {1.5}, 1, 1), ResolutionError);
  EXPECT_THROW(efron_stein_experiment(law, in.field, Vertex{2, 2}, in.w, in.V, {4}, 1, 1), DomainError);
  EXPECT_THROW(efron_stein_experiment(law, in.field, Vertex{0, 0}, in.w, in.V, {4}, 1, 1), DomainError);
  EXPECT_THROW(efron_stein_experiment(law, in.field, in.z, in.w, in.V, {4}, 0, 1), ConfigError);
  EXPECT_THROW(efron_stein_experiment(law, in.field, in.z, in.w, in.V, {}, 1, 1), ConfigError);
}
