#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gfflab/grid.hpp"
#include "gfflab/locality.hpp"
#include "gfflab/metric.hpp"

namespace gfflab {

/// Scale ladder and comparison constant for the good-annulus event. Scales
/// are decreasing; each annulus A(r/2, 2r) around the center must fit in the
/// grid and every circle must be resolved.
struct AnnulusEventConfig {
  GridSpec grid;
  Point center = Point::Zero();
  double s1 = 0.5;
  double s2 = 0.75;
  /// C >= 0. C = 0 is accepted and makes the event fail whenever the
  /// sup-diameter is positive.
  double C = 1.0;
  std::vector<double> scales;
  /// Use D for D-tilde instead of an independent copy.
  bool same_metric = false;
  /// Replace the field by h = 0.
  bool flat_field = false;

  /// ConfigError on bad numbers; GeometryError / ResolutionError when an
  /// annulus leaves the grid or a circle is under-resolved.
  void validate() const;

  /// r_k = r0 * 2^{-k}, k = 0 .. count-1.
  static std::vector<double> dyadic(double r0, int count);
};

/// Ingredients of one event evaluation.
struct AnnulusEventDetail {
  bool event = false;
  /// D-distance across A(r/2, r) inside the closed disk of radius r.
  double across = 0.0;
  double threshold = 0.0;
  /// D-tilde sup-diameter of the circle of radius r inside A(r/2, 2r),
  /// evaluated only up to the threshold unless `exact` was requested.
  BoundedDiameter diameter;
};

AnnulusEventDetail annulus_event_detail(const LatticeMetric& d, const LatticeMetric& d_tilde, const Point& z,
                                        double r, double C, bool exact = false);
bool annulus_event(const LatticeMetric& d, const LatticeMetric& d_tilde, const Point& z, double r, double C);

/// Outcomes of the event over replicates x scales, replicate-major.
struct EventTable {
  std::size_t replicates = 0;
  std::size_t scales = 0;
  std::vector<char> outcomes;
  /// Per-evaluation measurements; empty for synthetic tables.
  std::vector<double> across;
  std::vector<double> diameter;  // +inf when the evaluation stopped at the threshold

  bool operator()(std::size_t replicate, std::size_t k) const { return outcomes[replicate * scales + k] != 0; }
  /// Number of true events among the first K scales of a replicate.
  int count(std::size_t replicate, std::size_t K) const;
};

/// Fresh pinned field and conditionally independent pair per replicate,
/// seeded by (seed, replicate). `exact` evaluates full diameters (for
/// calibrating C) instead of stopping at the threshold.
EventTable sample_event_table(const AnnulusEventConfig& config, const MetricLaw& law, std::size_t replicates,
                              std::uint64_t seed, unsigned threads = 0, bool exact = false);

/// Independent Bernoulli(p) outcomes keyed by (seed, replicate, scale).
EventTable synthetic_event_table(std::size_t replicates, std::size_t scales, double p, std::uint64_t seed);
/// Every outcome equal to `value`.
EventTable constant_event_table(std::size_t replicates, std::size_t scales, bool value);

struct ProbabilityEstimate {
  std::size_t replicates = 0;
  std::vector<double> p_hat;
  /// Wilson 95% score interval.
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> half_width;
  std::vector<std::string> warnings;
};

ProbabilityEstimate estimate_event_probability(const EventTable& table);
ProbabilityEstimate estimate_event_probability(const AnnulusEventConfig& config, const MetricLaw& law,
                                               std::size_t replicates, std::uint64_t seed, unsigned threads = 0);

/// Wilson score interval for k successes out of n at normal quantile z.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct GoodRadiusRecord {
  Point z = Point::Zero();
  double r = 0.0;
  /// Largest 2^{-k} r (1 <= k <= k_max) with a true event.
  std::optional<double> rho;
  /// k achieving rho, 0 if none.
  int k = 0;
};

/// Scans t = r/2, r/4, ..., r 2^{-k_max} and keeps the first t with event(t).
GoodRadiusRecord good_radius(const Point& z, double r, int k_max, const std::function<bool(double)>& event);
/// ResolutionError if the deepest annulus is under-resolved.
GoodRadiusRecord good_radius(const LatticeMetric& d, const LatticeMetric& d_tilde, const Point& z, double r,
                             double C, int k_max);

struct GoodAnnulus {
  Point w = Point::Zero();
  double r = 0.0;
};

struct CoveringReport {
  bool pass = false;
  std::vector<Vertex> uncovered;
  std::vector<GoodAnnulus> good;
  double center_spacing = 0.0;
  /// Centers coarsened from eps^2/4 to the lattice step.
  bool coarsened = false;
  std::vector<double> radii;
  /// Dyadic radii in [eps^2, eps] dropped because their circles are not
  /// resolved on the lattice.
  std::vector<double> dropped_radii;
  std::size_t centers = 0;
  /// Pairs (w, r) whose annulus A(r/2, 2r) leaves the grid; counted as failed.
  std::size_t outside = 0;
  std::size_t events_evaluated = 0;
};

using AnnulusPredicate = std::function<bool(const Point& w, double r)>;

/// Centers on origin + s Z^2 with s = max(eps^2/4, spacing) and distance < eps
/// to some vertex of K; radii eps 2^{-k} in [eps^2, eps]. K is covered when
/// each of its vertices lies in an open B_{r/2}(w) with a true event.
/// ResolutionError if eps^2 < spacing or no radius survives.
CoveringReport covering_check(const DomainMask& region, double eps, const AnnulusPredicate& event);
CoveringReport covering_check(const LatticeMetric& d, const LatticeMetric& d_tilde, const DomainMask& region,
                              double eps, double C);

struct Crossing {
  /// Exit time along the path (cumulative D-length).
  double t = 0.0;
  Point w = Point::Zero();
  double r = 0.0;
  std::size_t exit_index = 0;
};

struct CrossingSequence {
  std::vector<Crossing> crossings;
  /// Number of completed crossings.
  int J = 0;
  /// Index and time of the point the scan stopped at.
  std::size_t final_index = 0;
  double final_time = 0.0;
};

/// From the current path point, among good annuli whose B_{r/2}(w) contains
/// it, takes the one the path exits (|P - w| >= r) first; repeats from the
/// exit point until no candidate is exited.
CrossingSequence crossing_sequence(const GridSpec& spec, const PathRecord& path, std::span<const GoodAnnulus> annuli);

/// Whether the union of the circles, drawn as bands of half-width `raster`,
/// links B_{2 eps}(z1) to B_{2 eps}(z2). With no circles the answer is
/// |z1 - z2| < 4 eps. ResolutionError if raster > min r / 8.
bool circles_connectivity_oracle(std::span<const GoodAnnulus> annuli, const Point& z1, const Point& z2, double eps,
                                 double raster);

struct BilipViolation {
  Vertex u;
  Vertex v;
  double d = 0.0;
  double d_tilde = 0.0;
};

/// Probe pairs with D-tilde(u, v) > C D(u, v) + 1e-9.
std::vector<BilipViolation> bilip_conclusion_check(const LatticeMetric& d, const LatticeMetric& d_tilde, double C,
                                                   const std::vector<std::pair<Vertex, Vertex>>& probes);

}  // namespace gfflab
