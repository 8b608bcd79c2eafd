#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gfflab/events.hpp"
#include "gfflab/field.hpp"

namespace gfflab {

/// Least-squares line through (K, log tail_K) over the nonzero tail bins.
struct DecayFit {
  bool fitted = false;
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
  /// 95th percentile of the slope over replicate bootstrap resamples.
  double slope_upper95 = 0.0;
  std::size_t bootstrap_resamples = 0;
};

struct IterationReport {
  double b = 0.0;
  std::size_t replicates = 0;
  /// N(K) per replicate, K = 1..scales, replicate-major.
  std::vector<int> counts;
  /// tail[K-1] = fraction of replicates with N(K) < b K.
  std::vector<double> tail;
  DecayFit fit;
  /// Fit present and its 95% upper slope bound is negative.
  bool decay_consistent = false;
  std::vector<std::string> warnings;

  int N(std::size_t replicate, std::size_t K) const { return counts[replicate * tail.size() + (K - 1)]; }
};

/// Empirical tails P[N(K) < b K] with an exponential-decay fit. The slope
/// upper bound comes from `resamples` bootstrap draws of whole replicates
/// keyed by `seed`.
IterationReport iteration_statistic(const EventTable& table, double b, std::uint64_t seed = 0,
                                    std::size_t resamples = 400);
IterationReport iteration_statistic(const AnnulusEventConfig& config, const MetricLaw& law, std::size_t replicates,
                                    double b, std::uint64_t seed, unsigned threads = 0);

/// OLS slope/intercept through (x, y); fitted = false with fewer than 3 points.
DecayFit fit_log_tail(const std::vector<double>& tail);

/// ((1-p)/(1-alpha))^n ((1-alpha) p / (alpha (1-p)))^{alpha n}, an upper bound
/// for P[Bin(n, p) < alpha n], evaluated in log space. DomainError unless 0 < alpha < p < 1, n >= 1.
double binomial_tail_bound(double p, double alpha, int n);

struct FluctuationScan {
  /// Harmonic fluctuation over B_{s r_k} of the extension into B_{r_k}.
  std::vector<double> fluctuation;
  /// N_M(K) = number of k <= K with fluctuation <= M.
  std::vector<int> N;
  std::vector<double> fraction;
};

/// ConfigError if some r_{k+1}/r_k exceeds s or s is outside (0, 1).
FluctuationScan harmonic_fluctuation_scan(const FieldSample& field, const Point& z, const std::vector<double>& scales,
                                          double s, double M);

/// Fluctuations for `replicates` pinned fields (pinned at scales[0]), one row
/// per replicate. Disk solvers are built once per scale.
Eigen::MatrixXd fluctuation_table(const GridSpec& grid, const Point& z, const std::vector<double>& scales, double s,
                                  std::size_t replicates, std::uint64_t seed, unsigned threads = 0);

/// Counts of N_M(K) for one row of a fluctuation table.
FluctuationScan scan_from_fluctuations(const std::vector<double>& fluctuation, double M);

/// Empirical quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double q);

}  // namespace gfflab
