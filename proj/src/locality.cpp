#include "gfflab/locality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gfflab/errors.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

namespace {

double discrepancy(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b);  // inf when exactly one side is infinite
}

std::vector<double> internal_distances(const LatticeMetric& m, const DomainMask& mask,
                                       const std::vector<std::pair<Vertex, Vertex>>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [u, v] : pairs) out.push_back(distance(m, u, v, mask));
  return out;
}

std::string describe(const DomainMask& mask) {
  std::ostringstream os;
  os << mask.count() << " of " << mask.spec().size() << " vertices";
  return os.str();
}

}  // namespace

LatticeMetric MetricLaw::build(const FieldSample& field, std::uint64_t noise_seed) const {
  if (sigma > 0.0) return build(field, noise_field(field.spec, noise_seed));
  return build(field, Eigen::ArrayXXd());
}

LatticeMetric MetricLaw::build(const FieldSample& field, const Eigen::ArrayXXd& noise) const {
  LatticeMetric m = sigma > 0.0 ? LatticeMetric::lfpp(field, xi, sigma, noise) : LatticeMetric::lfpp(field, xi);
  if (builder == MetricBuilder::global_max) return m.scaled(std::exp(xi * field.values.maxCoeff()));
  return m;
}

std::pair<LatticeMetric, LatticeMetric> sample_pair_given_field(const MetricLaw& law, const FieldSample& field,
                                                                std::uint64_t seed1, std::uint64_t seed2) {
  if (law.sigma > 0.0 && seed1 == seed2) throw ConfigError("conditionally independent pair needs distinct noise seeds");
  return {law.build(field, seed1), law.build(field, seed2)};
}

std::vector<std::pair<Vertex, Vertex>> probe_pairs(const DomainMask& mask, std::size_t count, std::uint64_t seed) {
  const std::vector<Vertex> vs = mask.vertices();
  std::vector<std::pair<Vertex, Vertex>> out;
  if (vs.size() < 2 || count == 0) return out;
  out.emplace_back(vs.front(), vs.back());
  rng::Stream stream(rng::derive(seed, 0x70726F6265ULL));
  while (out.size() < count) {
    const auto a = static_cast<std::size_t>(stream.uniform() * static_cast<double>(vs.size()));
    const auto b = static_cast<std::size_t>(stream.uniform() * static_cast<double>(vs.size()));
    if (a == b) continue;
    out.emplace_back(vs[a], vs[b]);
  }
  return out;
}

LocalityReport verify_locality(const MetricLaw& law, const FieldSample& field, const DomainMask& mask, int trials,
                               std::uint64_t seed, std::uint64_t noise_seed) {
  if (!(mask.spec() == field.spec)) throw DomainError("mask grid does not match field grid");
  if (mask.count() < 2) throw GeometryError("locality check needs at least two vertices in V");
  if (trials < 1) throw ConfigError("locality check needs at least one trial");
  const DomainMask outside = mask.closure().complement();
  if (outside.empty()) throw GeometryError("V and its neighbours cover every vertex: nothing to perturb");

  const GridSpec& spec = field.spec;
  const auto pairs = probe_pairs(mask, 16, seed);
  const Eigen::ArrayXXd base_noise = noise_field(spec, noise_seed);
  const auto reference = internal_distances(law.build(field, base_noise), mask, pairs);
  const std::vector<Vertex> far = outside.vertices();
  const DomainMask off_v = mask.complement();

  LocalityReport report;
  report.check = "locality";
  report.mask = describe(mask);
  report.perturbation = "gaussian bump of random amplitude plus a +10 spike outside closure(V); noise redrawn outside V";
  report.trials = trials;
  report.probes = pairs.size();
  report.seed = seed;

  for (int t = 0; t < trials; ++t) {
    rng::Stream stream(rng::derive(seed, t, 1));
    const double amplitude = 0.5 + 4.5 * stream.uniform();
    const auto spike = far[static_cast<std::size_t>(stream.uniform() * static_cast<double>(far.size()))];
    const std::uint64_t pert_seed = rng::derive(seed, t, 2);

    FieldSample perturbed = field;
    Eigen::ArrayXXd noise = base_noise;
    for (int j = 0; j < spec.ny; ++j)
      for (int i = 0; i < spec.nx; ++i) {
        const Index k = spec.index(i, j);
        if (outside.contains(k)) perturbed.values(i, j) += amplitude * rng::normal(pert_seed, k);
        if (off_v.contains(k)) noise(i, j) = rng::normal(rng::derive(pert_seed, 3), k);
      }
    perturbed.values(spike.i, spike.j) += 10.0;

    const auto again = internal_distances(law.build(perturbed, noise), mask, pairs);
    for (std::size_t p = 0; p < pairs.size(); ++p)
      report.discrepancy = std::max(report.discrepancy, discrepancy(reference[p], again[p]));
  }
  report.pass = report.discrepancy == 0.0;
  return report;
}

XiAdditivityReport verify_xi_additivity(const MetricLaw& law, const FieldSample& field, const Point& z, double r,
                                        std::uint64_t seed, std::uint64_t noise_seed) {
  XiAdditivityReport report;
  report.shift = circle_average(field, z, r);
  const FieldSample recentred = shifted(field, report.shift);
  const Eigen::ArrayXXd noise = noise_field(field.spec, noise_seed);
  const LatticeMetric original = law.build(field, noise);
  const LatticeMetric rescaled = law.build(recentred, noise);
  const double factor = std::exp(-law.xi * report.shift);

  const auto pairs = probe_pairs(DomainMask::full(field.spec), 12, seed);
  report.probes = pairs.size();
  for (const auto& [u, v] : pairs) {
    const double expected = factor * distance(original, u, v);
    const double got = distance(rescaled, u, v);
    if (expected == got) continue;
    report.max_relative_error = std::max(report.max_relative_error, std::abs(got - expected) / std::abs(expected));
  }

  DomainMask disk = DomainMask::disk(field.spec, z, r);
  if (disk.count() < 2 || disk.closure().count() == field.spec.size()) disk = DomainMask::rect(field.spec, 1, 1, 2, 2);
  report.locality_pass = verify_locality(law, recentred, disk, 4, rng::derive(seed, 7), noise_seed).pass;
  report.pass = report.max_relative_error <= 1e-12 && report.locality_pass;
  return report;
}

RatioRange lipschitz_ratio(const LatticeMetric& a, const LatticeMetric& b,
                           const std::vector<std::pair<Vertex, Vertex>>& probes) {
  RatioRange out{0.0, kInfinite};
  bool any = false;
  for (const auto& [u, v] : probes) {
    const double da = distance(a, u, v);
    const double db = distance(b, u, v);
    if (da == kInfinite || db == kInfinite) throw DomainError("probe pair is unreachable");
    if (da == 0.0 && db == 0.0) continue;
    if (da == 0.0 || db == 0.0) {
      std::ostringstream os;
      os << "degenerate probe pair (" << u.i << "," << u.j << ")-(" << v.i << "," << v.j
         << "): one distance is 0 and the other positive";
      throw DomainError(os.str());
    }
    const double ratio = db / da;
    out.max_ratio = std::max(out.max_ratio, ratio);
    out.min_ratio = std::min(out.min_ratio, ratio);
    any = true;
  }
  if (!any) return {1.0, 1.0};
  return out;
}

RatioRange edge_ratio_range(const LatticeMetric& a, const LatticeMetric& b, const DomainMask* mask) {
  if (!(a.spec() == b.spec())) throw DomainError("metrics live on different grids");
  const GridSpec& spec = a.spec();
  RatioRange out{0.0, kInfinite};
  auto take = [&](double wa, double wb) {
    const double ratio = wb / wa;
    out.max_ratio = std::max(out.max_ratio, ratio);
    out.min_ratio = std::min(out.min_ratio, ratio);
  };
  auto touches = [&](Vertex u, Vertex v) { return !mask || mask->contains(u) || mask->contains(v); };
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i + 1 < spec.nx; ++i)
      if (touches({i, j}, {i + 1, j})) take(a.horizontal()(i, j), b.horizontal()(i, j));
  for (int j = 0; j + 1 < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i)
      if (touches({i, j}, {i, j + 1})) take(a.vertical()(i, j), b.vertical()(i, j));
  if (out.min_ratio == kInfinite) return {1.0, 1.0};
  return out;
}

Eigen::ArrayXXd assemble_noise(const GridSpec& spec, std::uint64_t base_seed, const std::vector<DomainMask>& squares,
                               const std::vector<std::uint64_t>& seeds) {
  if (squares.size() != seeds.size()) throw ConfigError("one substream seed per square is required");
  Eigen::ArrayXXd noise = noise_field(spec, base_seed);
  for (std::size_t s = 0; s < squares.size(); ++s)
    for (const Vertex& v : squares[s].vertices())
      noise(v.i, v.j) = rng::normal(seeds[s], static_cast<std::uint64_t>(spec.index(v)));
  return noise;
}

SquareIndependenceReport square_independence_probe(const MetricLaw& law, const FieldSample& field,
                                                   const std::vector<DomainMask>& squares, std::size_t replicates,
                                                   std::uint64_t seed) {
  const GridSpec& spec = field.spec;
  for (std::size_t a = 0; a < squares.size(); ++a) {
    if (!(squares[a].spec() == spec)) throw DomainError("square grid does not match field grid");
    if (squares[a].count() < 2) throw DomainError("each square needs at least two vertices");
    for (std::size_t b = a + 1; b < squares.size(); ++b)
      if (squares[a].intersects(squares[b])) throw DomainError("squares overlap");
  }
  if (replicates < 2) throw ConfigError("square independence probe needs at least two replicates");

  const std::size_t n = squares.size();
  std::vector<std::pair<Vertex, Vertex>> ends;
  for (const auto& sq : squares) {
    const auto vs = sq.vertices();
    ends.emplace_back(vs.front(), vs.back());
  }
  auto seeds_for = [&](std::uint64_t key) {
    std::vector<std::uint64_t> s(n);
    for (std::size_t k = 0; k < n; ++k) s[k] = rng::derive(seed, key, k);
    return s;
  };
  auto functionals = [&](const Eigen::ArrayXXd& noise) {
    const LatticeMetric m = law.build(field, noise);
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k) f[k] = distance(m, ends[k].first, ends[k].second, squares[k]);
    return f;
  };

  SquareIndependenceReport report;
  report.replicates = replicates;
  report.band = 4.0 / std::sqrt(static_cast<double>(replicates));

  // Structural: square k's functional must not move when every other
  // substream (and the base stream) is redrawn.
  report.structural_pass = true;
  const std::size_t structural_rounds = std::min<std::size_t>(replicates, 8);
  for (std::size_t q = 0; q < structural_rounds && report.structural_pass; ++q) {
    const auto own = seeds_for(2 * q);
    const auto reference = functionals(assemble_noise(spec, rng::derive(seed, 1, q), squares, own));
    for (std::size_t k = 0; k < n; ++k) {
      auto other = seeds_for(2 * q + 1);
      other[k] = own[k];
      const auto moved = functionals(assemble_noise(spec, rng::derive(seed, 2, q), squares, other));
      if (moved[k] != reference[k]) report.structural_pass = false;
    }
  }

  // Statistical: cross-correlations of the functionals across replicates.
  Eigen::MatrixXd samples(replicates, n);
  for (std::size_t q = 0; q < replicates; ++q) {
    const auto f = functionals(assemble_noise(spec, rng::derive(seed, 3, q), squares, seeds_for(1000003 + q)));
    for (std::size_t k = 0; k < n; ++k) samples(q, k) = f[k];
  }
  const Eigen::MatrixXd centred = samples.rowwise() - samples.colwise().mean();
  const Eigen::VectorXd sd = centred.colwise().norm();
  report.correlation = Eigen::MatrixXd::Identity(n, n);
  report.degenerate = (sd.array() == 0.0).any();
  if (report.degenerate) {
    report.statistical_pass = true;
  } else {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double c = centred.col(a).dot(centred.col(b)) / (sd[a] * sd[b]);
        report.correlation(a, b) = report.correlation(b, a) = c;
        report.max_abs_correlation = std::max(report.max_abs_correlation, std::abs(c));
      }
    report.statistical_pass = report.max_abs_correlation <= report.band;
  }
  report.pass = report.structural_pass && report.statistical_pass;
  return report;
}

}  // namespace gfflab
