#include "gfflab/efron_stein.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gfflab/errors.hpp"
#include "gfflab/parallel.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

bool EfronSteinReport::bound_holds() const {
  return std::all_of(levels.begin(), levels.end(), [](const auto& l) { return l.bound_violations == 0; });
}

bool EfronSteinReport::partition_exact() const {
  return std::all_of(levels.begin(), levels.end(), [](const auto& l) { return l.partition_exact; });
}

namespace {

SquareKey key_of(const GridSpec& spec, Vertex v, const Point& theta, double eps) {
  return square_containing(spec.point(v), theta, eps);
}

SquareKey edge_key(const GridSpec& spec, Vertex a, Vertex b, const Point& theta, double eps) {
  return square_containing(0.5 * (spec.point(a) + spec.point(b)), theta, eps);
}

}  // namespace

EfronSteinReport efron_stein_experiment(const MetricLaw& law, const FieldSample& field, Vertex z, Vertex w,
                                        const DomainMask& V, const std::vector<double>& eps_ladder,
                                        std::size_t replicates, std::uint64_t seed, unsigned threads) {
  const GridSpec& spec = field.spec;
  if (!(V.spec() == spec)) throw DomainError("mask grid does not match field grid");
  if (replicates == 0) throw ConfigError("replicates must be positive");
  if (eps_ladder.empty()) throw ConfigError("eps ladder is empty");
  for (double eps : eps_ladder)
    if (!(eps >= 2 * spec.spacing)) throw ResolutionError("eps below two lattice steps");
  const DomainMask rim = V.boundary_layer();
  for (Vertex v : {z, w})
    if (!V.contains(v) || rim.contains(v)) throw DomainError("endpoints must be interior vertices of V");

  EfronSteinReport report;
  report.z = z;
  report.w = w;
  report.replicates = replicates;
  report.seed = seed;

  const Eigen::ArrayXXd base_noise = noise_field(spec, rng::derive(seed, 0));
  const LatticeMetric base = law.build(field, base_noise);
  const PathRecord path = geodesic(base, z, w, V);
  const std::vector<Vertex> inside = V.vertices();

  for (std::size_t level = 0; level < eps_ladder.size(); ++level) {
    const double eps = eps_ladder[level];
    EfronSteinLevel out;
    out.eps = eps;
    const std::uint64_t theta_key = rng::derive(seed, 1);
    out.theta = Point(rng::uniform(theta_key, 2 * level), rng::uniform(theta_key, 2 * level + 1));
    out.distance = path.total;

    const SquareLengths split = path_length_by_squares(base, path, out.theta, eps);
    out.path_length = split.total.value();
    out.partition_exact = split.partition_exact();
    out.ties = split.ties;

    std::map<SquareKey, std::vector<Vertex>> members;
    for (const Vertex& v : inside) members[key_of(spec, v, out.theta, eps)].push_back(v);
    std::vector<SquareKey> keys;
    for (const auto& [key, vs] : members) keys.push_back(key);
    out.square_count = keys.size();
    out.squares.resize(keys.size());

    parallel_for(keys.size(), threads, [&](std::size_t s) {
      const SquareKey key = keys[s];
      const std::vector<Vertex>& vs = members.at(key);
      DomainMask in_square(spec);
      for (const Vertex& v : vs) in_square.set(v);

      SquareRecord rec;
      rec.key = key;
      rec.vertices = vs.size();
      rec.path_length = split.length(key);
      for (std::size_t e = 0; e + 1 < path.vertices.size(); ++e) {
        const Vertex a = path.vertices[e];
        const Vertex b = path.vertices[e + 1];
        if ((in_square.contains(a) || in_square.contains(b)) && !(edge_key(spec, a, b, out.theta, eps) == key))
          rec.boundary_length += path.cumulative[e + 1] - path.cumulative[e];
      }
      rec.min_slack = kInfinite;

      double sum_sq = 0.0;
      for (std::size_t q = 0; q < replicates; ++q) {
        Eigen::ArrayXXd noise = base_noise;
        const std::uint64_t key_q = rng::derive(seed, 2, level, s, q);
        for (const Vertex& v : vs) noise(v.i, v.j) = rng::normal(key_q, static_cast<std::uint64_t>(spec.index(v)));
        const LatticeMetric resampled = law.build(field, noise);
        const double diff = distance(resampled, z, w, V) - out.distance;
        sum_sq += diff * diff;

        const double ratio = std::max(1.0, edge_ratio_range(base, resampled, &in_square).max_ratio);
        const double bound =
            ratio * ratio * rec.path_length + ratio * rec.boundary_length + 1e-12 * out.distance;
        const double excess = std::max(0.0, diff);
        rec.max_positive_diff = std::max(rec.max_positive_diff, excess);
        rec.min_slack = std::min(rec.min_slack, bound - excess);
        if (excess > bound) rec.bound_holds = false;
      }
      rec.mean_sq_diff = sum_sq / static_cast<double>(replicates);
      out.squares[s] = rec;
    });

    for (const SquareRecord& rec : out.squares) {
      out.proxy += rec.mean_sq_diff;
      out.max_square_length = std::max(out.max_square_length, rec.path_length);
      out.bound_violations += !rec.bound_holds;
    }
    out.proxy *= 0.5;
    report.levels.push_back(std::move(out));
  }
  return report;
}

}  // namespace gfflab
