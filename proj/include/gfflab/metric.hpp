#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <algorithm>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gfflab/exact_sum.hpp"
#include "gfflab/field.hpp"
#include "gfflab/grid.hpp"

namespace gfflab {

/// Distance between points with no connecting path.
inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

/// Standard normals keyed by (seed, vertex index); one substream per seed.
Eigen::ArrayXXd noise_field(const GridSpec& spec, std::uint64_t seed);

/// Shortest-path metric on the 4-connected lattice. Edge (u, v) has length
///   spacing * exp(xi * (phi(u) + phi(v)) / 2),   phi = h + sigma * noise,
/// which is LFPP for sigma = 0. Immutable once built.
class LatticeMetric {
 public:
  static LatticeMetric lfpp(const FieldSample& field, double xi);
  static LatticeMetric lfpp(const FieldSample& field, double xi, double sigma, Eigen::ArrayXXd noise);
  /// Arbitrary positive weights; horizontal is (nx-1) x ny for edges
  /// (i,j)-(i+1,j), vertical is nx x (ny-1) for edges (i,j)-(i,j+1).
  static LatticeMetric from_weights(const GridSpec& spec, Eigen::ArrayXXd horizontal, Eigen::ArrayXXd vertical);

  const GridSpec& spec() const { return spec_; }
  double xi() const { return xi_; }
  double sigma() const { return sigma_; }
  /// Per-vertex noise (empty when built without one).
  const Eigen::ArrayXXd& noise() const { return noise_; }
  /// Source field, null for from_weights.
  const std::shared_ptr<const FieldSample>& field() const { return field_; }

  const Eigen::ArrayXXd& horizontal() const { return horizontal_; }
  const Eigen::ArrayXXd& vertical() const { return vertical_; }
  /// Weight of the lattice edge {u, v}; DomainError unless u, v are adjacent.
  double weight(Vertex u, Vertex v) const;
  /// Every edge weight multiplied by `factor` > 0.
  LatticeMetric scaled(double factor) const;

 private:
  LatticeMetric() = default;
  void check_weights() const;

  GridSpec spec_;
  double xi_ = 0.0;
  double sigma_ = 0.0;
  Eigen::ArrayXXd noise_;
  std::shared_ptr<const FieldSample> field_;
  Eigen::ArrayXXd horizontal_;
  Eigen::ArrayXXd vertical_;
};

/// Dijkstra on a LatticeMetric, optionally confined to a mask. Heap order is
/// (distance, vertex index); on equal tentative distances the predecessor
/// with the smaller index wins, so trees are deterministic. Buffers are
/// reused across runs.
class ShortestPathSearch {
 public:
  explicit ShortestPathSearch(const LatticeMetric& metric, const DomainMask* mask = nullptr);

  /// Runs from the given sources (distance 0 each). `on_settle(v, d)` is
  /// called once per settled vertex in nondecreasing d and returns false to
  /// stop. The search also stops before settling any vertex with d > bound.
  template <typename OnSettle>
  void run(std::span<const Index> sources, double bound, OnSettle&& on_settle);
  void run(std::span<const Index> sources, double bound = kInfinite) {
    run(sources, bound, [](Index, double) { return true; });
  }

  /// Tentative distance after the last run (exact for settled vertices).
  double distance(Index v) const { return dist_[v]; }
  bool settled(Index v) const { return done_[v] != 0; }
  Index predecessor(Index v) const { return pred_[v]; }
  bool allowed(Index v) const { return !mask_ || mask_[v]; }

 private:
  void reset();

  const LatticeMetric& metric_;
  const bool* mask_ = nullptr;
  std::vector<double> dist_;
  std::vector<Index> pred_;
  std::vector<char> done_;
  std::vector<Index> touched_;
  using Entry = std::pair<double, Index>;
  // Binary min-heap on (distance, index); a plain vector keeps its capacity.
  std::vector<Entry> heap_;
  void push(double d, Index v) {
    heap_.emplace_back(d, v);
    std::push_heap(heap_.begin(), heap_.end(), std::greater<Entry>());
  }
  void pop() {
    std::pop_heap(heap_.begin(), heap_.end(), std::greater<Entry>());
    heap_.pop_back();
  }
};

/// Shortest-path length between u and v, over paths inside the mask when one
/// is given (the internal metric). kInfinite if there is no such path.
/// Computed from the lower-index endpoint so the result is symmetric bit for
/// bit. DomainError if u or v lies off the grid or outside the mask.
double distance(const LatticeMetric& metric, Vertex u, Vertex v);
double distance(const LatticeMetric& metric, Vertex u, Vertex v, const DomainMask& mask);

/// min over a in A, b in B of the internal distance, by one multi-source sweep.
double distance_set_to_set(const LatticeMetric& metric, std::span<const Vertex> a, std::span<const Vertex> b,
                           const DomainMask& mask);

/// Result of a sup-diameter computation that may stop at a bound.
struct BoundedDiameter {
  double value = 0.0;     // exact when !exceeded
  bool exceeded = false;  // true: the diameter is known to be > bound
};

/// max over pairs of vertices in circle_band(z, r) of the internal distance
/// within the open annulus r/2 < |x - z| < 2r.
double circle_sup_internal_diameter(const LatticeMetric& metric, const Point& z, double r);
/// Same, stopping as soon as the diameter is known to exceed `bound`.
BoundedDiameter circle_sup_internal_diameter(const LatticeMetric& metric, const Point& z, double r, double bound);

/// A lattice path with cumulative lengths from its first vertex.
struct PathRecord {
  std::vector<Vertex> vertices;
  std::vector<double> cumulative;
  double total = 0.0;
};

/// A shortest path from u to v (inside the mask if given), with
/// total == distance(u, v) exactly. NoPathError if unreachable.
PathRecord geodesic(const LatticeMetric& metric, Vertex u, Vertex v);
PathRecord geodesic(const LatticeMetric& metric, Vertex u, Vertex v, const DomainMask& mask);

/// {x : distance(z, x) <= s}.
DomainMask metric_ball(const LatticeMetric& metric, Vertex z, double s);

/// Square of the grid eps * (Z^2 + theta): the square [eps (kx + theta_x),
/// eps (kx + 1 + theta_x)) x [...].
struct SquareKey {
  int kx = 0;
  int ky = 0;
  friend constexpr auto operator<=>(const SquareKey&, const SquareKey&) = default;
};

/// Square containing p. A point exactly on a grid line goes to the square
/// below / to the left of it and sets *on_line.
SquareKey square_containing(const Point& p, const Point& theta, double eps, bool* on_line = nullptr);

/// Path length split by squares of a shifted grid. Sums are exact.
struct SquareLengths {
  std::map<SquareKey, ExactSum> by_square;
  /// Exact sum of every edge weight of the path.
  ExactSum total;
  /// Edges whose midpoint fell on a grid line.
  int ties = 0;

  std::map<SquareKey, double> lengths() const;
  double length(const SquareKey& key) const;
  /// Sum over squares equals the path length, compared exactly.
  bool partition_exact() const;
};

/// Assigns each edge of the path to the square containing its midpoint.
SquareLengths path_length_by_squares(const LatticeMetric& metric, const PathRecord& path, const Point& theta,
                                     double eps);

// ---------------------------------------------------------------------------

template <typename OnSettle>
void ShortestPathSearch::run(std::span<const Index> sources, double bound, OnSettle&& on_settle) {
  reset();
  const GridSpec& spec = metric_.spec();
  const int nx = spec.nx;
  const int ny = spec.ny;
  const double* hw = metric_.horizontal().data();
  const double* vw = metric_.vertical().data();
  const Index hstride = nx - 1;

  for (Index s : sources) {
    if (dist_[s] != 0.0) {
      if (dist_[s] == kInfinite) touched_.push_back(s);
      dist_[s] = 0.0;
      pred_[s] = -1;
      push(0.0, s);
    }
  }

  auto relax = [&](Index u, double du, Index w, double weight) {
    if (mask_ && !mask_[w]) return;
    if (done_[w]) return;
    const double nd = du + weight;
    double& dw = dist_[w];
    if (nd < dw) {
      if (dw == kInfinite) touched_.push_back(w);
      dw = nd;
      pred_[w] = u;
      push(nd, w);
    } else if (nd == dw && u < pred_[w]) {
      pred_[w] = u;
    }
  };

  while (!heap_.empty()) {
    const auto [d, u] = heap_.front();
    if (d > dist_[u] || done_[u]) {
      pop();
      continue;
    }
    if (d > bound) break;
    pop();
    done_[u] = 1;
    if (!on_settle(u, d)) break;
    const int i = static_cast<int>(u % nx);
    const int j = static_cast<int>(u / nx);
    if (i > 0) relax(u, d, u - 1, hw[(i - 1) + hstride * j]);
    if (i + 1 < nx) relax(u, d, u + 1, hw[i + hstride * j]);
    if (j > 0) relax(u, d, u - nx, vw[i + Index(nx) * (j - 1)]);
    if (j + 1 < ny) relax(u, d, u + nx, vw[i + Index(nx) * j]);
  }
}

}  // namespace gfflab
