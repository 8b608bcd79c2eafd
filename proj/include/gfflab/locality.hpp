#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gfflab/field.hpp"
#include "gfflab/grid.hpp"
#include "gfflab/metric.hpp"

namespace gfflab {

enum class MetricBuilder {
  /// Vertex-local LFPP weights: the internal metric on V reads h and noise on V only.
  lfpp,
  /// Negative control: LFPP weights times exp(xi * max h). Reads the whole field.
  global_max,
};

/// Conditional law of a metric given the field: LFPP with coupling xi plus
/// i.i.d. standard normal vertex noise of amplitude sigma entering the
/// exponent additively. Fresh noise seeds give conditionally i.i.d. samples.
struct MetricLaw {
  double xi = 0.0;
  double sigma = 0.0;
  MetricBuilder builder = MetricBuilder::lfpp;

  LatticeMetric build(const FieldSample& field, std::uint64_t noise_seed) const;
  LatticeMetric build(const FieldSample& field, const Eigen::ArrayXXd& noise) const;
};

/// Two metrics sharing the field, with independent noise streams. ConfigError
/// if seed1 == seed2 while sigma > 0.
std::pair<LatticeMetric, LatticeMetric> sample_pair_given_field(const MetricLaw& law, const FieldSample& field,
                                                                std::uint64_t seed1, std::uint64_t seed2);

/// Deterministic probe pairs drawn from the mask (at most `count`).
std::vector<std::pair<Vertex, Vertex>> probe_pairs(const DomainMask& mask, std::size_t count, std::uint64_t seed);

struct LocalityReport {
  std::string check;
  std::string mask;
  std::string perturbation;
  int trials = 0;
  std::size_t probes = 0;
  std::uint64_t seed = 0;
  /// max |D'(u,v;V) - D(u,v;V)| over trials and probes.
  double discrepancy = 0.0;
  /// discrepancy == 0 exactly.
  bool pass = false;
};

/// Perturbs the field strictly outside the closure of V (and the noise
/// outside V) `trials` times and compares the internal metric on V over a
/// fixed probe set, bit for bit. GeometryError if nothing lies outside the
/// closure of V.
LocalityReport verify_locality(const MetricLaw& law, const FieldSample& field, const DomainMask& mask, int trials,
                               std::uint64_t seed, std::uint64_t noise_seed = 0);

struct XiAdditivityReport {
  double shift = 0.0;  // circle average c = h_r(z)
  double max_relative_error = 0.0;
  std::size_t probes = 0;
  bool locality_pass = false;
  /// error <= 1e-12 and the rescaled locality check passed.
  bool pass = false;
};

/// Compares distances of the metric built from (h - h_r(z)) with e^{-xi c}
/// times those built from h, same noise, on a probe set.
XiAdditivityReport verify_xi_additivity(const MetricLaw& law, const FieldSample& field, const Point& z, double r,
                                        std::uint64_t seed, std::uint64_t noise_seed = 0);

struct RatioRange {
  double max_ratio = 1.0;
  double min_ratio = 1.0;
};

/// Extremes of d_B / d_A over the probes (pairs with both distances 0 are
/// skipped). DomainError if exactly one of them is 0 or either is infinite.
RatioRange lipschitz_ratio(const LatticeMetric& a, const LatticeMetric& b,
                           const std::vector<std::pair<Vertex, Vertex>>& probes);

/// Extremes of w_B(e) / w_A(e) over lattice edges with at least one endpoint
/// in the mask (all edges when mask is null).
RatioRange edge_ratio_range(const LatticeMetric& a, const LatticeMetric& b, const DomainMask* mask = nullptr);

/// Noise array whose values on squares[s] come from substream seeds[s] and
/// elsewhere from base_seed. The value at vertex v depends only on the seed of
/// the part containing v.
Eigen::ArrayXXd assemble_noise(const GridSpec& spec, std::uint64_t base_seed, const std::vector<DomainMask>& squares,
                               const std::vector<std::uint64_t>& seeds);

struct SquareIndependenceReport {
  bool structural_pass = false;
  /// sigma == 0: every functional is constant, correlations undefined.
  bool degenerate = false;
  std::size_t replicates = 0;
  /// Sample correlations of the per-square functionals, row-major.
  Eigen::MatrixXd correlation;
  double max_abs_correlation = 0.0;
  /// 4 / sqrt(replicates).
  double band = 0.0;
  bool statistical_pass = false;
  bool pass = false;
};

/// Field frozen, noise regenerated per square per replicate. The functional
/// of square s is the internal distance between its first and last vertex.
/// DomainError if two masks overlap.
SquareIndependenceReport square_independence_probe(const MetricLaw& law, const FieldSample& field,
                                                   const std::vector<DomainMask>& squares, std::size_t replicates,
                                                   std::uint64_t seed);

}  // namespace gfflab
