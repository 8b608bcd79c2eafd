#include <gtest/gtest.h>

#include <cmath>

#include "gfflab/errors.hpp"
#include "gfflab/locality.hpp"
#include "gfflab/rng.hpp"

using namespace gfflab;

TEST(Pair, ZeroNoiseGivesIdenticalMetrics) {
  const FieldSample f = sample_torus({16, 16}, 1);
  const MetricLaw law{0.5, 0.0};
  const auto [a, b] = sample_pair_given_field(law, f, 1, 2);
  EXPECT_TRUE((a.horizontal() == b.horizontal()).all());
  EXPECT_TRUE((a.vertical() == b.vertical()).all());
  EXPECT_NO_THROW(sample_pair_given_field(law, f, 3, 3));
  EXPECT_THROW(sample_pair_given_field(MetricLaw{0.5, 0.1}, f, 3, 3), ConfigError);
}

TEST(Pair, SwappingSeedsSwapsMetrics) {
  const FieldSample f = sample_torus({12, 12}, 2);
  const MetricLaw law{0.4, 0.2};
  const auto [a, b] = sample_pair_given_field(law, f, 10, 20);
  const auto [c, d] = sample_pair_given_field(law, f, 20, 10);
  EXPECT_TRUE((a.horizontal() == d.horizontal()).all());
  EXPECT_TRUE((b.vertical() == c.vertical()).all());
}

TEST(Pair, NoiseStreamsAreUncorrelated) {
  GridSpec g{8, 8};
  const int n = 5000;
  double s = 0;
  for (int q = 0; q < n; ++q) {
    const Eigen::ArrayXXd a = noise_field(g, rng::derive(1, q, 1));
    const Eigen::ArrayXXd b = noise_field(g, rng::derive(1, q, 2));
    s += a(3, 4) * b(3, 4);
  }
  EXPECT_NEAR(s / n, 0.0, 4 / std::sqrt(double(n)));
}

TEST(Locality, LfppPassesOnAssortedMasks) {
  GridSpec g{32, 32};
  const FieldSample f = sample_pinned(g, Point(16, 16), 6, 3);
  for (const MetricLaw law : {MetricLaw{0.5, 0.0}, MetricLaw{0.3, 0.2}}) {
    for (const DomainMask& mask : {DomainMask::rect(g, 4, 5, 12, 20), DomainMask::disk(g, Point(15, 17), 7.3),
                                   DomainMask::annulus(g, Point(16, 16), 3, 9)}) {
      const LocalityReport r = verify_locality(law, f, mask, 5, 11);
      EXPECT_TRUE(r.pass);
      EXPECT_EQ(r.discrepancy, 0.0);
      EXPECT_GT(r.probes, 1u);
    }
  }
}

TEST(Locality, GlobalMaximumBuilderFails) {
  GridSpec g{32, 32};
  const FieldSample f = sample_pinned(g, Point(16, 16), 6, 3);
  MetricLaw law{0.5, 0.0, MetricBuilder::global_max};
  const LocalityReport r = verify_locality(law, f, DomainMask::rect(g, 4, 4, 10, 10), 3, 2);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.discrepancy, 0.0);
}

TEST(Locality, FarSpikeChangesOnlyAmbientDistances) {
  GridSpec g{20, 20};
  const FieldSample f = constant_field(g, 0.0);
  const DomainMask square = DomainMask::rect(g, 3, 3, 6, 6);
  FieldSample spiked = f;
  spiked.values(15, 10) += 10.0;
  const MetricLaw law{0.5, 0.0};
  const LatticeMetric before = law.build(f, 0), after = law.build(spiked, 0);
  EXPECT_EQ(distance(before, {3, 3}, {6, 6}, square), distance(after, {3, 3}, {6, 6}, square));
  // An ambient distance whose only geodesics pass through the spike.
  EXPECT_LT(distance(before, {15, 9}, {15, 11}), distance(after, {15, 9}, {15, 11}));
}

TEST(Locality, NothingOutsideClosureIsAnError) {
  GridSpec g{6, 6};
  EXPECT_THROW(verify_locality(MetricLaw{0.3, 0.0}, constant_field(g, 0), DomainMask::rect(g, 0, 0, 5, 4), 1, 0),
               GeometryError);
}

TEST(XiAdditivity, PinnedFieldHasZeroShift) {
  GridSpec g{40, 40};
  const FieldSample f = sample_pinned(g, Point(20, 20), 8, 5);
  const auto r = verify_xi_additivity(MetricLaw{0.4, 0.1}, f, Point(20, 20), 8, 1);
  EXPECT_NEAR(r.shift, 0.0, 1e-12);
  EXPECT_LE(r.max_relative_error, 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(XiAdditivity, ConstantFieldMatchesFlatMetric) {
  GridSpec g{24, 24};
  const MetricLaw law{0.7, 0.0};
  const FieldSample f = constant_field(g, 1.3);
  const auto r = verify_xi_additivity(law, f, Point(12, 12), 5, 2);
  EXPECT_EQ(r.shift, 1.3);
  EXPECT_TRUE(r.pass);
  const LatticeMetric flat = law.build(constant_field(g, 0.0), 0);
  const LatticeMetric recentred = law.build(shifted(f, r.shift), 0);
  EXPECT_EQ(distance(flat, {1, 2}, {20, 19}), distance(recentred, {1, 2}, {20, 19}));
}

TEST(XiAdditivity, RandomFieldsWithinTolerance) {
  GridSpec g{32, 32};
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto r = verify_xi_additivity(MetricLaw{0.6, 0.2}, sample_torus(g, s), Point(15.5, 16.2), 6, s);
    EXPECT_LE(r.max_relative_error, 1e-12);
    EXPECT_TRUE(r.pass);
  }
}

TEST(Lipschitz, IdentityAndScaling) {
  GridSpec g{16, 16};
  const LatticeMetric a = MetricLaw{0.4, 0.2}.build(sample_torus(g, 1), 3);
  const auto probes = probe_pairs(DomainMask::full(g), 20, 4);
  const RatioRange same = lipschitz_ratio(a, a, probes);
  EXPECT_EQ(same.max_ratio, 1.0);
  EXPECT_EQ(same.min_ratio, 1.0);
  const double c = std::exp(0.4 * 1.7);
  const RatioRange scaled = lipschitz_ratio(a, a.scaled(c), probes);
  EXPECT_NEAR(scaled.max_ratio, c, 1e-12 * c);
  EXPECT_NEAR(scaled.min_ratio, c, 1e-12 * c);
}

TEST(Lipschitz, NoisePairWithinPerEdgeBound) {
  GridSpec g{16, 16};
  const double xi = 0.4, sigma = 0.2;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const FieldSample f = sample_torus(g, s);
    const auto [a, b] = sample_pair_given_field(MetricLaw{xi, sigma}, f, rng::derive(s, 1), rng::derive(s, 2));
    const double worst = std::max(a.noise().abs().maxCoeff(), b.noise().abs().maxCoeff());
    // Each edge ratio is exp(xi sigma (dn_u + dn_v) / 2) with |dn| <= 2 worst.
    const double bound = std::exp(2 * xi * sigma * worst);
    const RatioRange r = lipschitz_ratio(a, b, probe_pairs(DomainMask::full(g), 40, s));
    EXPECT_LE(r.max_ratio, bound);
    EXPECT_GE(r.min_ratio, 1 / bound);
    const RatioRange e = edge_ratio_range(a, b);
    EXPECT_LE(r.max_ratio, e.max_ratio * (1 + 1e-12));
    EXPECT_GE(r.min_ratio, e.min_ratio * (1 - 1e-12));
  }
}

TEST(Lipschitz, SkipsCoincidentPairsAndReportsOverflow) {
  GridSpec g{5, 5};
  const LatticeMetric a = MetricLaw{0.4, 0.0}.build(constant_field(g, 0), 0);
  const RatioRange r = lipschitz_ratio(a, a.scaled(2.0), {{{1, 1}, {1, 1}}, {{1, 1}, {2, 2}}});
  EXPECT_EQ(r.max_ratio, 2.0);
  EXPECT_EQ(r.min_ratio, 2.0);
  const LatticeMetric huge = LatticeMetric::from_weights(g, Eigen::ArrayXXd::Constant(4, 5, 1e308),
                                                         Eigen::ArrayXXd::Constant(5, 4, 1e308));
  EXPECT_THROW(lipschitz_ratio(a, huge, {{{0, 0}, {4, 4}}}), DomainError);
}

TEST(SquareIndependence, FarSquaresAreIndependent) {
  GridSpec g{24, 24};
  const FieldSample f = sample_torus(g, 4);
  const std::vector<DomainMask> squares = {DomainMask::rect(g, 2, 2, 4, 4), DomainMask::rect(g, 18, 17, 20, 19)};
  const auto r = square_independence_probe(MetricLaw{0.4, 0.3}, f, squares, 10000, 8);
  EXPECT_TRUE(r.structural_pass);
  EXPECT_FALSE(r.degenerate);
  EXPECT_DOUBLE_EQ(r.band, 0.04);
  EXPECT_LE(r.max_abs_correlation, r.band);
  EXPECT_TRUE(r.pass);
}

TEST(SquareIndependence, ZeroNoiseIsDegeneratePass) {
  GridSpec g{12, 12};
  const std::vector<DomainMask> squares = {DomainMask::rect(g, 1, 1, 3, 3), DomainMask::rect(g, 7, 7, 9, 9)};
  const auto r = square_independence_probe(MetricLaw{0.4, 0.0}, sample_torus(g, 1), squares, 50, 1);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(r.pass);
}

TEST(SquareIndependence, OverlapIsRejected) {
  GridSpec g{12, 12};
  const std::vector<DomainMask> squares = {DomainMask::rect(g, 1, 1, 4, 4), DomainMask::rect(g, 4, 4, 6, 6)};
  EXPECT_THROW(square_independence_probe(MetricLaw{0.4, 0.2}, constant_field(g, 0), squares, 10, 1), DomainError);
}
