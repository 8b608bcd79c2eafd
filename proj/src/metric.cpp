#include "gfflab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gfflab/errors.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

namespace {

void require_in(const GridSpec& spec, Vertex v) {
  if (!spec.contains(v)) {
    std::ostringstream os;
    os << "vertex (" << v.i << ", " << v.j << ") is outside the " << spec.nx << "x" << spec.ny << " grid";
    throw DomainError(os.str());
  }
}

void require_in(const DomainMask& mask, Vertex v) {
  require_in(mask.spec(), v);
  if (!mask.contains(v)) {
    std::ostringstream os;
    os << "vertex (" << v.i << ", " << v.j << ") is outside the mask";
    throw DomainError(os.str());
  }
}

void require_same_grid(const LatticeMetric& metric, const DomainMask& mask) {
  if (!(metric.spec() == mask.spec())) throw DomainError("mask grid does not match metric grid");
}

double point_to_point(const LatticeMetric& metric, Vertex u, Vertex v, const DomainMask* mask) {
  const GridSpec& spec = metric.spec();
  if (u == v) return 0.0;
  const Index a = std::min(spec.index(u), spec.index(v));
  const Index b = std::max(spec.index(u), spec.index(v));
  ShortestPathSearch search(metric, mask);
  search.run(std::span<const Index>(&a, 1), kInfinite, [b](Index x, double) { return x != b; });
  return search.distance(b);
}

PathRecord trace(const LatticeMetric& metric, Vertex u, Vertex v, const DomainMask* mask) {
  const GridSpec& spec = metric.spec();
  PathRecord path;
  if (u == v) {
    path.vertices = {u};
    path.cumulative = {0.0};
    return path;
  }
  const Index iu = spec.index(u);
  const Index iv = spec.index(v);
  const Index a = std::min(iu, iv);
  const Index b = std::max(iu, iv);
  ShortestPathSearch search(metric, mask);
  search.run(std::span<const Index>(&a, 1), kInfinite, [b](Index x, double) { return x != b; });
  const double total = search.distance(b);
  if (total == kInfinite) {
    std::ostringstream os;
    os << "no path from (" << u.i << ", " << u.j << ") to (" << v.i << ", " << v.j << ")";
    throw NoPathError(os.str());
  }

  // Chain from b back to the source a; distances along it are the settled
  // Dijkstra labels, so the path length reproduces `total` exactly.
  std::vector<Index> chain;
  for (Index x = b; x != -1; x = search.predecessor(x)) chain.push_back(x);
  path.total = total;
  path.vertices.reserve(chain.size());
  path.cumulative.reserve(chain.size());
  if (iu == a) {
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      path.vertices.push_back(spec.vertex(*it));
      path.cumulative.push_back(search.distance(*it));
    }
  } else {
    for (Index x : chain) {
      path.vertices.push_back(spec.vertex(x));
      path.cumulative.push_back(total - search.distance(x));
    }
  }
  return path;
}

}  // namespace

Eigen::ArrayXXd noise_field(const GridSpec& spec, std::uint64_t seed) {
  Eigen::ArrayXXd n(spec.nx, spec.ny);
  double* data = n.data();
  for (Index k = 0; k < spec.size(); ++k) data[k] = rng::normal(seed, static_cast<std::uint64_t>(k));
  return n;
}

LatticeMetric LatticeMetric::lfpp(const FieldSample& field, double xi) {
  return lfpp(field, xi, 0.0, Eigen::ArrayXXd());
}

LatticeMetric LatticeMetric::lfpp(const FieldSample& field, double xi, double sigma, Eigen::ArrayXXd noise) {
  field.spec.validate();
  if (!std::isfinite(xi)) throw ConfigError("xi must be finite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("noise amplitude must be finite and >= 0");
  const GridSpec& spec = field.spec;
  if (noise.size() != 0 && (noise.rows() != spec.nx || noise.cols() != spec.ny))
    throw ConfigError("noise array shape does not match the grid");
  if (sigma > 0.0 && noise.size() == 0) throw ConfigError("sigma > 0 needs a noise array");

  LatticeMetric m;
  m.spec_ = spec;
  m.xi_ = xi;
  m.sigma_ = sigma;
  m.field_ = std::make_shared<const FieldSample>(field);
  m.noise_ = std::move(noise);

  const Eigen::ArrayXXd phi = (sigma > 0.0) ? Eigen::ArrayXXd(field.values + sigma * m.noise_) : field.values;
  const int nx = spec.nx;
  const int ny = spec.ny;
  m.horizontal_ = spec.spacing * (0.5 * xi * (phi.topRows(nx - 1) + phi.bottomRows(nx - 1))).exp();
  m.vertical_ = spec.spacing * (0.5 * xi * (phi.leftCols(ny - 1) + phi.rightCols(ny - 1))).exp();
  m.check_weights();
  return m;
}

LatticeMetric LatticeMetric::from_weights(const GridSpec& spec, Eigen::ArrayXXd horizontal, Eigen::ArrayXXd vertical) {
  spec.validate();
  if (horizontal.rows() != spec.nx - 1 || horizontal.cols() != spec.ny || vertical.rows() != spec.nx ||
      vertical.cols() != spec.ny - 1)
    throw ConfigError("edge weight arrays have the wrong shape");
  LatticeMetric m;
  m.spec_ = spec;
  m.horizontal_ = std::move(horizontal);
  m.vertical_ = std::move(vertical);
  m.check_weights();
  return m;
}

void LatticeMetric::check_weights() const {
  auto ok = [](const Eigen::ArrayXXd& w) { return w.allFinite() && (w > 0.0).all(); };
  if (!ok(horizontal_) || !ok(vertical_)) throw NumericalError("edge weights must be positive and finite");
}

double LatticeMetric::weight(Vertex u, Vertex v) const {
  require_in(spec_, u);
  require_in(spec_, v);
  if (u.j == v.j && std::abs(u.i - v.i) == 1) return horizontal_(std::min(u.i, v.i), u.j);
  if (u.i == v.i && std::abs(u.j - v.j) == 1) return vertical_(u.i, std::min(u.j, v.j));
  throw DomainError("vertices are not lattice neighbours");
}

LatticeMetric LatticeMetric::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ConfigError("scale factor must be positive and finite");
  LatticeMetric m = *this;
  m.horizontal_ *= factor;
  m.vertical_ *= factor;
  m.check_weights();
  return m;
}

ShortestPathSearch::ShortestPathSearch(const LatticeMetric& metric, const DomainMask* mask)
    : metric_(metric),
      dist_(static_cast<std::size_t>(metric.spec().size()), kInfinite),
      pred_(static_cast<std::size_t>(metric.spec().size()), -1),
      done_(static_cast<std::size_t>(metric.spec().size()), 0) {
  if (mask) {
    require_same_grid(metric, *mask);
    mask_ = mask->bits().data();
  }
}

void ShortestPathSearch::reset() {
  for (Index v : touched_) {
    dist_[v] = kInfinite;
    pred_[v] = -1;
    done_[v] = 0;
  }
  touched_.clear();
  heap_.clear();
}

double distance(const LatticeMetric& metric, Vertex u, Vertex v) {
  require_in(metric.spec(), u);
  require_in(metric.spec(), v);
  return point_to_point(metric, u, v, nullptr);
}

double distance(const LatticeMetric& metric, Vertex u, Vertex v, const DomainMask& mask) {
  require_same_grid(metric, mask);
  require_in(mask, u);
  require_in(mask, v);
  return point_to_point(metric, u, v, &mask);
}

double distance_set_to_set(const LatticeMetric& metric, std::span<const Vertex> a, std::span<const Vertex> b,
                           const DomainMask& mask) {
  if (a.empty() || b.empty()) throw DomainError("set-to-set distance needs two nonempty sets");
  require_same_grid(metric, mask);
  const GridSpec& spec = metric.spec();
  std::vector<Index> sources;
  sources.reserve(a.size());
  for (const Vertex& v : a) {
    require_in(mask, v);
    sources.push_back(spec.index(v));
  }
  std::vector<char> is_target(static_cast<std::size_t>(spec.size()), 0);
  for (const Vertex& v : b) {
    require_in(mask, v);
    is_target[spec.index(v)] = 1;
  }
  double found = kInfinite;
  ShortestPathSearch search(metric, &mask);
  search.run(sources, kInfinite, [&](Index x, double d) {
    if (is_target[x]) {
      found = d;
      return false;
    }
    return true;
  });
  return found;
}

BoundedDiameter circle_sup_internal_diameter(const LatticeMetric& metric, const Point& z, double r, double bound) {
  const GridSpec& spec = metric.spec();
  std::vector<Vertex> band = resolved_circle_band(spec, z, r);
  const DomainMask annulus = DomainMask::annulus(spec, z, 0.5 * r, 2.0 * r);
  std::vector<Index> ids;
  ids.reserve(band.size());
  for (const Vertex& v : band) {
    if (!annulus.contains(v)) throw ResolutionError("circle band is not inside its annulus at this lattice spacing");
    ids.push_back(spec.index(v));
  }
  std::sort(ids.begin(), ids.end());

  // rank[x] = position of x in the sorted band, -1 elsewhere. From source k
  // only the band vertices of higher rank are needed.
  std::vector<int> rank(static_cast<std::size_t>(spec.size()), -1);
  for (std::size_t k = 0; k < ids.size(); ++k) rank[ids[k]] = static_cast<int>(k);

  ShortestPathSearch search(metric, &annulus);
  BoundedDiameter out;
  for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
    const int src_rank = static_cast<int>(k);
    std::size_t remaining = ids.size() - k - 1;
    double farthest = 0.0;
    search.run(std::span<const Index>(&ids[k], 1), bound, [&](Index x, double d) {
      if (rank[x] > src_rank) {
        farthest = d;
        return --remaining > 0;
      }
      return true;
    });
    if (remaining > 0) {
      // Some target is beyond the bound or disconnected; either way the
      // diameter exceeds any finite bound.
      if (bound == kInfinite) return {kInfinite, false};
      return {kInfinite, true};
    }
    out.value = std::max(out.value, farthest);
  }
  return out;
}

double circle_sup_internal_diameter(const LatticeMetric& metric, const Point& z, double r) {
  return circle_sup_internal_diameter(metric, z, r, kInfinite).value;
}

PathRecord geodesic(const LatticeMetric& metric, Vertex u, Vertex v) {
  require_in(metric.spec(), u);
  require_in(metric.spec(), v);
  return trace(metric, u, v, nullptr);
}

PathRecord geodesic(const LatticeMetric& metric, Vertex u, Vertex v, const DomainMask& mask) {
  require_same_grid(metric, mask);
  require_in(mask, u);
  require_in(mask, v);
  return trace(metric, u, v, &mask);
}

DomainMask metric_ball(const LatticeMetric& metric, Vertex z, double s) {
  const GridSpec& spec = metric.spec();
  require_in(spec, z);
  if (!(s >= 0.0)) throw ConfigError("ball radius must be >= 0");
  DomainMask ball(spec);
  const Index src = spec.index(z);
  ShortestPathSearch search(metric);
  search.run(std::span<const Index>(&src, 1), s, [&](Index x, double) {
    ball.set(spec.vertex(x));
    return true;
  });
  return ball;
}

SquareKey square_containing(const Point& p, const Point& theta, double eps, bool* on_line) {
  const double ux = p.x() / eps - theta.x();
  const double uy = p.y() / eps - theta.y();
  double fx = std::floor(ux);
  double fy = std::floor(uy);
  bool tie = false;
  if (fx == ux) {
    fx -= 1.0;
    tie = true;
  }
  if (fy == uy) {
    fy -= 1.0;
    tie = true;
  }
  if (on_line) *on_line = tie;
  return {static_cast<int>(fx), static_cast<int>(fy)};
}

std::map<SquareKey, double> SquareLengths::lengths() const {
  std::map<SquareKey, double> out;
  for (const auto& [key, sum] : by_square) out.emplace(key, sum.value());
  return out;
}

double SquareLengths::length(const SquareKey& key) const {
  auto it = by_square.find(key);
  return it == by_square.end() ? 0.0 : it->second.value();
}

bool SquareLengths::partition_exact() const {
  ExactSum sum;
  for (const auto& [key, part] : by_square) sum += part;
  return exactly_equal(sum, total);
}

SquareLengths path_length_by_squares(const LatticeMetric& metric, const PathRecord& path, const Point& theta,
                                     double eps) {
  if (!(eps > 0.0)) throw ConfigError("square size must be positive");
  const GridSpec& spec = metric.spec();
  SquareLengths out;
  for (std::size_t k = 1; k < path.vertices.size(); ++k) {
    const Vertex a = path.vertices[k - 1];
    const Vertex b = path.vertices[k];
    const double w = metric.weight(a, b);
    const Point mid = 0.5 * (spec.point(a) + spec.point(b));
    bool tie = false;
    const SquareKey key = square_containing(mid, theta, eps, &tie);
    if (tie) ++out.ties;
    out.by_square[key].add(w);
    out.total.add(w);
  }
  return out;
}

}  // namespace gfflab
