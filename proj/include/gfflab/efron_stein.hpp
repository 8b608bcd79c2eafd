#pragma once

#include <cstdint>
#include <vector>

#include "gfflab/field.hpp"
#include "gfflab/grid.hpp"
#include "gfflab/locality.hpp"
#include "gfflab/metric.hpp"

namespace gfflab {

struct SquareRecord {
  SquareKey key;
  /// Vertices of V inside the square (their noise is resampled).
  std::size_t vertices = 0;
  /// len(P cap S; D): path edges whose midpoint lies in S.
  double path_length = 0.0;
  /// Length of path edges with an endpoint in S but midpoint elsewhere.
  double boundary_length = 0.0;
  /// Mean over replicates of (D^S - D)^2.
  double mean_sq_diff = 0.0;
  double max_positive_diff = 0.0;
  /// Smallest bound - (D^S - D)_+ over replicates.
  double min_slack = 0.0;
  bool bound_holds = true;
};

struct EfronSteinLevel {
  double eps = 0.0;
  Point theta = Point::Zero();
  /// D(z, w; V) with the base noise.
  double distance = 0.0;
  double path_length = 0.0;
  std::size_t square_count = 0;
  std::vector<SquareRecord> squares;
  /// Half the sum over squares of mean_sq_diff.
  double proxy = 0.0;
  double max_square_length = 0.0;
  bool partition_exact = false;
  /// Path edges whose midpoint fell on a grid line.
  int ties = 0;
  std::size_t bound_violations = 0;
};

struct EfronSteinReport {
  Vertex z;
  Vertex w;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<EfronSteinLevel> levels;

  bool bound_holds() const;
  bool partition_exact() const;
};

/// For each eps: a uniform shift theta, the squares of eps (Z^2 + theta)
/// meeting V, and per square `replicates` redraws of the noise of V inside
/// that square. The one-sided check per square and replicate is
///   (D^S - D)_+ <= L^2 len(P cap S) + L len(boundary edges) + 1e-12 D,
/// with L >= 1 the largest weight ratio w^S / w over edges touching S.
/// ResolutionError if some eps < 2 spacing; DomainError if z or w is not an
/// interior vertex of V.
EfronSteinReport efron_stein_experiment(const MetricLaw& law, const FieldSample& field, Vertex z, Vertex w,
                                        const DomainMask& V, const std::vector<double>& eps_ladder,
                                        std::size_t replicates, std::uint64_t seed, unsigned threads = 0);

}  // namespace gfflab
