#include "gfflab/iteration.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "gfflab/dirichlet.hpp"
#include "gfflab/errors.hpp"
#include "gfflab/parallel.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

namespace {

std::vector<double> tails(const std::vector<int>& counts, std::size_t scales, double b,
                          const std::vector<std::size_t>& rows) {
  std::vector<double> out(scales, 0.0);
  for (std::size_t q : rows)
    for (std::size_t K = 1; K <= scales; ++K)
      if (counts[q * scales + K - 1] < b * static_cast<double>(K)) out[K - 1] += 1.0;
  for (double& t : out) t /= static_cast<double>(rows.size());
  return out;
}

void check_ladder(const std::vector<double>& scales, double s) {
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("s must lie in (0, 1)");
  if (scales.empty()) throw ConfigError("scale ladder is empty");
  for (std::size_t k = 1; k < scales.size(); ++k)
    if (scales[k] > s * scales[k - 1] * (1 + 1e-12)) throw ConfigError("scales must shrink by at least the factor s");
}

}  // namespace

DecayFit fit_log_tail(const std::vector<double>& tail) {
  DecayFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < tail.size(); ++k) {
    if (!(tail[k] > 0.0)) continue;
    const double x = static_cast<double>(k + 1);
    const double y = std::log(tail[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.points;
  }
  if (fit.points < 3) return fit;
  const double n = static_cast<double>(fit.points);
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.fitted = true;
  return fit;
}

IterationReport iteration_statistic(const EventTable& table, double b, std::uint64_t seed, std::size_t resamples) {
  if (!(b > 0.0 && b < 1.0)) throw ConfigError("b must lie in (0, 1)");
  if (table.replicates == 0 || table.scales == 0) throw ConfigError("event table is empty");
  IterationReport report;
  report.b = b;
  report.replicates = table.replicates;
  const std::size_t S = table.scales;
  report.counts.resize(table.replicates * S);
  for (std::size_t q = 0; q < table.replicates; ++q) {
    int n = 0;
    for (std::size_t k = 0; k < S; ++k) {
      n += table(q, k);
      report.counts[q * S + k] = n;
    }
  }
  if (table.replicates < 1000) report.warnings.push_back("fewer than 1000 replicates: tails are coarse");

  std::vector<std::size_t> all(table.replicates);
  for (std::size_t q = 0; q < all.size(); ++q) all[q] = q;
  report.tail = tails(report.counts, S, b, all);
  report.fit = fit_log_tail(report.tail);
  if (!report.fit.fitted) {
    report.warnings.push_back("fit-degenerate: fewer than 3 nonzero tail bins, slope omitted");
    return report;
  }

  std::vector<double> slopes;
  std::vector<std::size_t> rows(table.replicates);
  for (std::size_t t = 0; t < resamples; ++t) {
    const std::uint64_t key = rng::derive(seed, 0x626F6F74ULL, t);
    for (std::size_t q = 0; q < rows.size(); ++q)
      rows[q] = std::min(rows.size() - 1, static_cast<std::size_t>(rng::uniform(key, q) * rows.size()));
    const DecayFit f = fit_log_tail(tails(report.counts, S, b, rows));
    // A resample without enough nonzero bins carries no decay evidence.
    slopes.push_back(f.fitted ? f.slope : kInfinite);
  }
  report.fit.bootstrap_resamples = resamples;
  report.fit.slope_upper95 = resamples ? quantile(slopes, 0.95) : report.fit.slope;
  report.decay_consistent = report.fit.slope_upper95 < 0.0;
  return report;
}

IterationReport iteration_statistic(const AnnulusEventConfig& config, const MetricLaw& law, std::size_t replicates,
                                    double b, std::uint64_t seed, unsigned threads) {
  return iteration_statistic(sample_event_table(config, law, replicates, seed, threads), b, rng::derive(seed, 99));
}

double binomial_tail_bound(double p, double alpha, int n) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < p)) throw DomainError("need 0 < alpha < p");
  if (n < 1) throw DomainError("n must be at least 1");
  const double nn = static_cast<double>(n);
  const double log_rate = std::log1p(-p) - std::log1p(-alpha) +
                         alpha * (std::log1p(-alpha) + std::log(p) - std::log(alpha) - std::log1p(-p));
  return std::exp(nn * log_rate);
}

FluctuationScan scan_from_fluctuations(const std::vector<double>& fluctuation, double M) {
  FluctuationScan out;
  out.fluctuation = fluctuation;
  int n = 0;
  for (std::size_t k = 0; k < fluctuation.size(); ++k) {
    n += fluctuation[k] <= M;
    out.N.push_back(n);
    out.fraction.push_back(static_cast<double>(n) / static_cast<double>(k + 1));
  }
  return out;
}

FluctuationScan harmonic_fluctuation_scan(const FieldSample& field, const Point& z, const std::vector<double>& scales,
                                          double s, double M) {
  check_ladder(scales, s);
  std::vector<double> f;
  for (double r : scales) f.push_back(harmonic_fluctuation(field, z, s * r, r));
  return scan_from_fluctuations(f, M);
}

Eigen::MatrixXd fluctuation_table(const GridSpec& grid, const Point& z, const std::vector<double>& scales, double s,
                                  std::size_t replicates, std::uint64_t seed, unsigned threads) {
  check_ladder(scales, s);
  std::vector<std::unique_ptr<DirichletSolver>> solvers;
  for (double r : scales) solvers.push_back(std::make_unique<DirichletSolver>(DomainMask::disk(grid, z, r)));
  Eigen::MatrixXd out(replicates, scales.size());
  parallel_for(replicates, threads, [&](std::size_t q) {
    const FieldSample field = sample_pinned(grid, z, scales.front(), rng::derive(seed, q));
    for (std::size_t k = 0; k < scales.size(); ++k)
      out(q, k) = harmonic_fluctuation(field, *solvers[k], z, s * scales[k], scales[k]);
  });
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(values.size() - 1, lo + 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace gfflab
