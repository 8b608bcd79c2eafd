#include "gfflab/events.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "gfflab/errors.hpp"
#include "gfflab/parallel.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

namespace {

void require_inside(const GridSpec& spec, const Point& z, double radius, const char* what) {
  const Point lo = spec.origin;
  const Point hi = spec.origin + spec.spacing * Point(spec.nx - 1, spec.ny - 1);
  if (z.x() - radius < lo.x() || z.y() - radius < lo.y() || z.x() + radius > hi.x() || z.y() + radius > hi.y()) {
    std::ostringstream os;
    os << what << " of radius " << radius << " around (" << z.x() << ", " << z.y() << ") leaves the grid";
    throw GeometryError(os.str());
  }
}

bool annulus_fits(const GridSpec& spec, const Point& w, double r) {
  const Point lo = spec.origin;
  const Point hi = spec.origin + spec.spacing * Point(spec.nx - 1, spec.ny - 1);
  return w.x() - 2 * r >= lo.x() && w.y() - 2 * r >= lo.y() && w.x() + 2 * r <= hi.x() && w.y() + 2 * r <= hi.y();
}

}  // namespace

void AnnulusEventConfig::validate() const {
  grid.validate();
  if (!(s1 > 0.0 && s1 < s2 && s2 < 1.0)) throw ConfigError("need 0 < s1 < s2 < 1");
  if (!(C >= 0.0) || !std::isfinite(C)) throw ConfigError("C must be finite and >= 0");
  if (scales.empty()) throw ConfigError("scale ladder is empty");
  for (std::size_t k = 0; k < scales.size(); ++k) {
    if (!(scales[k] > 0.0) || !std::isfinite(scales[k])) throw ConfigError("scales must be positive");
    if (k > 0 && scales[k] > s1 * scales[k - 1] * (1.0 + 1e-12))
      throw ConfigError("scales must shrink by at least the factor s1");
  }
  for (double r : scales) {
    require_inside(grid, center, 2 * r, "annulus");
    resolved_circle_band(grid, center, r / 2);
    resolved_circle_band(grid, center, r);
  }
}

std::vector<double> AnnulusEventConfig::dyadic(double r0, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(std::ldexp(r0, -k));
  return out;
}

AnnulusEventDetail annulus_event_detail(const LatticeMetric& d, const LatticeMetric& d_tilde, const Point& z,
                                        double r, double C, bool exact) {
  const GridSpec& spec = d.spec();
  const auto inner = resolved_circle_band(spec, z, r / 2);
  const auto outer = resolved_circle_band(spec, z, r);
  const DomainMask disk = DomainMask::disk(spec, z, r + spec.spacing);

  AnnulusEventDetail out;
  out.across = distance_set_to_set(d, inner, outer, disk);
  out.threshold = C * out.across;
  if (exact) {
    out.diameter.value = circle_sup_internal_diameter(d_tilde, z, r);
  } else {
    out.diameter = circle_sup_internal_diameter(d_tilde, z, r, out.threshold);
  }
  out.event = !out.diameter.exceeded && out.diameter.value <= out.threshold;
  return out;
}

bool annulus_event(const LatticeMetric& d, const LatticeMetric& d_tilde, const Point& z, double r, double C) {
  return annulus_event_detail(d, d_tilde, z, r, C).event;
}

int EventTable::count(std::size_t replicate, std::size_t K) const {
  int n = 0;
  for (std::size_t k = 0; k < K; ++k) n += outcomes[replicate * scales + k] != 0;
  return n;
}

EventTable sample_event_table(const AnnulusEventConfig& config, const MetricLaw& law, std::size_t replicates,
                              std::uint64_t seed, unsigned threads, bool exact) {
  config.validate();
  const std::size_t K = config.scales.size();
  EventTable table;
  table.replicates = replicates;
  table.scales = K;
  table.outcomes.assign(replicates * K, 0);
  table.across.assign(replicates * K, 0.0);
  table.diameter.assign(replicates * K, 0.0);

  parallel_for(replicates, threads, [&](std::size_t q) {
    const FieldSample field = config.flat_field
                                  ? constant_field(config.grid, 0.0)
                                  : sample_pinned(config.grid, config.center, config.scales.front(), rng::derive(seed, q, 0));
    const LatticeMetric d = law.build(field, rng::derive(seed, q, 1));
    const LatticeMetric d_tilde = config.same_metric ? d : law.build(field, rng::derive(seed, q, 2));
    for (std::size_t k = 0; k < K; ++k) {
      const auto detail = annulus_event_detail(d, d_tilde, config.center, config.scales[k], config.C, exact);
      table.outcomes[q * K + k] = detail.event;
      table.across[q * K + k] = detail.across;
      table.diameter[q * K + k] = detail.diameter.exceeded ? kInfinite : detail.diameter.value;
    }
  });
  return table;
}

EventTable synthetic_event_table(std::size_t replicates, std::size_t scales, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("injected probability must lie in [0, 1]");
  EventTable table;
  table.replicates = replicates;
  table.scales = scales;
  table.outcomes.resize(replicates * scales);
  for (std::size_t q = 0; q < replicates; ++q) {
    const std::uint64_t key = rng::derive(seed, q);
    for (std::size_t k = 0; k < scales; ++k) table.outcomes[q * scales + k] = rng::uniform(key, k) < p;
  }
  return table;
}

EventTable constant_event_table(std::size_t replicates, std::size_t scales, bool value) {
  EventTable table;
  table.replicates = replicates;
  table.scales = scales;
  table.outcomes.assign(replicates * scales, value);
  return table;
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  if (k > n) throw DomainError("wilson_interval: more successes than trials");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

ProbabilityEstimate estimate_event_probability(const EventTable& table) {
  ProbabilityEstimate out;
  out.replicates = table.replicates;
  if (table.replicates < 100) out.warnings.push_back("fewer than 100 replicates");
  for (std::size_t k = 0; k < table.scales; ++k) {
    std::size_t hits = 0;
    for (std::size_t q = 0; q < table.replicates; ++q) hits += table(q, k);
    const double p = table.replicates ? static_cast<double>(hits) / table.replicates : 0.0;
    const auto [lo, hi] = wilson_interval(hits, table.replicates);
    out.p_hat.push_back(p);
    out.lower.push_back(lo);
    out.upper.push_back(hi);
    out.half_width.push_back((hi - lo) / 2);
  }
  return out;
}

ProbabilityEstimate estimate_event_probability(const AnnulusEventConfig& config, const MetricLaw& law,
                                               std::size_t replicates, std::uint64_t seed, unsigned threads) {
  return estimate_event_probability(sample_event_table(config, law, replicates, seed, threads));
}

GoodRadiusRecord good_radius(const Point& z, double r, int k_max, const std::function<bool(double)>& event) {
  if (k_max < 1) throw ConfigError("k_max must be at least 1");
  GoodRadiusRecord out;
  out.z = z;
  out.r = r;
  for (int k = 1; k <= k_max; ++k) {
    const double t = std::ldexp(r, -k);
    if (event(t)) {
      out.rho = t;
      out.k = k;
      break;
    }
  }
  return out;
}

GoodRadiusRecord good_radius(const LatticeMetric& d, const LatticeMetric& d_tilde, const Point& z, double r,
                             double C, int k_max) {
  if (k_max < 1) throw ConfigError("k_max must be at least 1");
  resolved_circle_band(d.spec(), z, std::ldexp(r, -k_max) / 2);
  return good_radius(z, r, k_max, [&](double t) { return annulus_event(d, d_tilde, z, t, C); });
}

CoveringReport covering_check(const DomainMask& region, double eps, const AnnulusPredicate& event) {
  const GridSpec& spec = region.spec();
  const double delta = spec.spacing;
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (eps * eps < delta) throw ResolutionError("eps^2 is below the lattice step");
  const std::vector<Vertex> K = region.vertices();
  if (K.empty()) throw DomainError("covering region is empty");

  CoveringReport report;
  report.center_spacing = std::max(eps * eps / 4, delta);
  report.coarsened = eps * eps / 4 < delta;
  for (int k = 1;; ++k) {
    const double r = std::ldexp(eps, -k);
    if (r < eps * eps * (1 - 1e-12)) break;
    // Circles of radius r/2 need at least two lattice steps to be resolved.
    (r / 2 >= 2 * delta ? report.radii : report.dropped_radii).push_back(r);
  }
  if (report.radii.empty()) throw ResolutionError("no radius in [eps^2, eps] is resolved on the lattice");

  std::vector<Point> pts;
  pts.reserve(K.size());
  double xmin = kInfinite, ymin = kInfinite, xmax = -kInfinite, ymax = -kInfinite;
  for (const Vertex& v : K) {
    const Point p = spec.point(v);
    pts.push_back(p);
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const double s = report.center_spacing;
  const long a0 = static_cast<long>(std::ceil((xmin - eps - spec.origin.x()) / s));
  const long a1 = static_cast<long>(std::floor((xmax + eps - spec.origin.x()) / s));
  const long b0 = static_cast<long>(std::ceil((ymin - eps - spec.origin.y()) / s));
  const long b1 = static_cast<long>(std::floor((ymax + eps - spec.origin.y()) / s));

  std::vector<char> covered(K.size(), 0);
  for (long b = b0; b <= b1; ++b)
    for (long a = a0; a <= a1; ++a) {
      const Point w = spec.origin + s * Point(static_cast<double>(a), static_cast<double>(b));
      const bool near = std::any_of(pts.begin(), pts.end(), [&](const Point& p) { return (p - w).norm() < eps; });
      if (!near) continue;
      ++report.centers;
      for (double r : report.radii) {
        if (!annulus_fits(spec, w, r)) {
          ++report.outside;
          continue;
        }
        ++report.events_evaluated;
        if (!event(w, r)) continue;
        report.good.push_back({w, r});
        for (std::size_t m = 0; m < pts.size(); ++m)
          if ((pts[m] - w).norm() < r / 2) covered[m] = 1;
      }
    }
  for (std::size_t m = 0; m < K.size(); ++m)
    if (!covered[m]) report.uncovered.push_back(K[m]);
  report.pass = report.uncovered.empty();
  return report;
}

CoveringReport covering_check(const LatticeMetric& d, const LatticeMetric& d_tilde, const DomainMask& region,
                              double eps, double C) {
  return covering_check(region, eps, [&](const Point& w, double r) { return annulus_event(d, d_tilde, w, r, C); });
}

CrossingSequence crossing_sequence(const GridSpec& spec, const PathRecord& path, std::span<const GoodAnnulus> annuli) {
  CrossingSequence out;
  const std::size_t n = path.vertices.size();
  if (n == 0) return out;
  std::vector<Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = spec.point(path.vertices[i]);

  std::size_t at = 0;
  for (;;) {
    std::size_t best_exit = n;
    const GoodAnnulus* best = nullptr;
    for (const GoodAnnulus& a : annuli) {
      if ((pts[at] - a.w).norm() >= a.r / 2) continue;
      for (std::size_t m = at + 1; m < best_exit; ++m)
        if ((pts[m] - a.w).norm() >= a.r) {
          best_exit = m;
          best = &a;
          break;
        }
    }
    if (!best) break;
    out.crossings.push_back({path.cumulative[best_exit], best->w, best->r, best_exit});
    at = best_exit;
  }
  out.J = static_cast<int>(out.crossings.size());
  out.final_index = at;
  out.final_time = path.cumulative[at];
  return out;
}

bool circles_connectivity_oracle(std::span<const GoodAnnulus> annuli, const Point& z1, const Point& z2, double eps,
                                 double raster) {
  if (annuli.empty()) return (z1 - z2).norm() < 4 * eps;
  if (!(raster > 0.0)) throw ConfigError("raster step must be positive");
  double rmin = kInfinite;
  Point lo = z1.cwiseMin(z2) - Point::Constant(2 * eps);
  Point hi = z1.cwiseMax(z2) + Point::Constant(2 * eps);
  for (const auto& a : annuli) {
    rmin = std::min(rmin, a.r);
    lo = lo.cwiseMin(a.w - Point::Constant(a.r + raster));
    hi = hi.cwiseMax(a.w + Point::Constant(a.r + raster));
  }
  if (raster > rmin / 8) throw ResolutionError("raster step exceeds min r / 8");

  lo -= Point::Constant(2 * raster);
  const long nx = static_cast<long>(std::ceil((hi.x() - lo.x()) / raster)) + 3;
  const long ny = static_cast<long>(std::ceil((hi.y() - lo.y()) / raster)) + 3;
  if (static_cast<double>(nx) * static_cast<double>(ny) > 2e8) throw ResolutionError("raster too fine for the domain");
  auto cell = [&](long a, long b) -> Point { return lo + raster * Point(static_cast<double>(a), static_cast<double>(b)); };

  std::vector<char> band(static_cast<std::size_t>(nx * ny), 0);
  for (const auto& a : annuli) {
    const long a0 = std::max(0L, static_cast<long>(std::floor((a.w.x() - a.r - raster - lo.x()) / raster)));
    const long a1 = std::min(nx - 1, static_cast<long>(std::ceil((a.w.x() + a.r + raster - lo.x()) / raster)));
    const long b0 = std::max(0L, static_cast<long>(std::floor((a.w.y() - a.r - raster - lo.y()) / raster)));
    const long b1 = std::min(ny - 1, static_cast<long>(std::ceil((a.w.y() + a.r + raster - lo.y()) / raster)));
    for (long b = b0; b <= b1; ++b)
      for (long c = a0; c <= a1; ++c)
        if (std::abs((cell(c, b) - a.w).norm() - a.r) <= raster) band[b * nx + c] = 1;
  }

  std::vector<char> seen(band.size(), 0);
  std::deque<long> queue;
  for (long b = 0; b < ny; ++b)
    for (long c = 0; c < nx; ++c)
      if (band[b * nx + c] && (cell(c, b) - z1).norm() < 2 * eps) {
        seen[b * nx + c] = 1;
        queue.push_back(b * nx + c);
      }
  while (!queue.empty()) {
    const long k = queue.front();
    queue.pop_front();
    const long c = k % nx;
    const long b = k / nx;
    if ((cell(c, b) - z2).norm() < 2 * eps) return true;
    const long next[4] = {c > 0 ? k - 1 : -1, c + 1 < nx ? k + 1 : -1, b > 0 ? k - nx : -1, b + 1 < ny ? k + nx : -1};
    for (long m : next)
      if (m >= 0 && band[m] && !seen[m]) {
        seen[m] = 1;
        queue.push_back(m);
      }
  }
  return false;
}

std::vector<BilipViolation> bilip_conclusion_check(const LatticeMetric& d, const LatticeMetric& d_tilde, double C,
                                                   const std::vector<std::pair<Vertex, Vertex>>& probes) {
  std::vector<BilipViolation> out;
  for (const auto& [u, v] : probes) {
    const double a = distance(d, u, v);
    const double b = distance(d_tilde, u, v);
    if (b > C * a + 1e-9) out.push_back({u, v, a, b});
  }
  return out;
}

}  // namespace gfflab
