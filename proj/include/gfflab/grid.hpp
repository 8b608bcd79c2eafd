#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gfflab {

using Index = std::int64_t;
using Point = Eigen::Vector2d;

/// Lattice site (i, j): i runs along x, j along y.
struct Vertex {
  int i = 0;
  int j = 0;
  friend constexpr auto operator<=>(const Vertex&, const Vertex&) = default;
};

/// Rectangular lattice of nx * ny vertices with step `spacing`. Vertex (i, j)
/// sits at origin + spacing * (i, j). Linear indices are row-major in j, which
/// matches the column-major storage of an nx-by-ny Eigen array.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double spacing = 1.0;
  Point origin = Point::Zero();

  /// Throws ConfigError unless nx, ny >= 2 and spacing is positive and finite.
  void validate() const;

  Index size() const { return Index(nx) * ny; }
  Index index(Vertex v) const { return Index(v.j) * nx + v.i; }
  Index index(int i, int j) const { return Index(j) * nx + i; }
  Vertex vertex(Index k) const { return {int(k % nx), int(k / nx)}; }
  Point point(Vertex v) const { return origin + spacing * Point(v.i, v.j); }
  Point point(int i, int j) const { return point(Vertex{i, j}); }
  bool contains(Vertex v) const { return v.i >= 0 && v.j >= 0 && v.i < nx && v.j < ny; }
  bool on_boundary(Vertex v) const { return v.i == 0 || v.j == 0 || v.i == nx - 1 || v.j == ny - 1; }

  /// Lattice vertex closest to a continuum point (clamped to the grid).
  Vertex nearest(const Point& p) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.nx == b.nx && a.ny == b.ny && a.spacing == b.spacing && a.origin == b.origin;
  }
};

/// The four lattice neighbours of v that lie inside the grid, in a fixed order
/// (-x, +x, -y, +y). Returns the count written to `out`.
inline int neighbours(const GridSpec& spec, Vertex v, Vertex (&out)[4]) {
  int n = 0;
  if (v.i > 0) out[n++] = {v.i - 1, v.j};
  if (v.i + 1 < spec.nx) out[n++] = {v.i + 1, v.j};
  if (v.j > 0) out[n++] = {v.i, v.j - 1};
  if (v.j + 1 < spec.ny) out[n++] = {v.i, v.j + 1};
  return n;
}

/// A vertex subset standing in for an open set V of the continuum domain.
class DomainMask {
 public:
  DomainMask() = default;
  explicit DomainMask(const GridSpec& spec, bool fill = false);

  static DomainMask full(const GridSpec& spec) { return DomainMask(spec, true); }
  /// Vertices with i0 <= i <= i1 and j0 <= j <= j1 (clipped to the grid).
  static DomainMask rect(const GridSpec& spec, int i0, int j0, int i1, int j1);
  /// Open disk |x - z| < r.
  static DomainMask disk(const GridSpec& spec, const Point& z, double r);
  /// Open annulus r_in < |x - z| < r_out.
  static DomainMask annulus(const GridSpec& spec, const Point& z, double r_in, double r_out);
  static DomainMask from_vertices(const GridSpec& spec, std::span<const Vertex> vertices);

  const GridSpec& spec() const { return spec_; }
  bool contains(Vertex v) const { return spec_.contains(v) && inside_(v.i, v.j); }
  bool contains(Index k) const { return inside_.data()[k]; }
  void set(Vertex v, bool value = true) { inside_(v.i, v.j) = value; }
  Index count() const { return inside_.count(); }
  bool empty() const { return count() == 0; }

  DomainMask complement() const;
  /// Inside vertices with at least one grid neighbour outside the mask.
  DomainMask boundary_layer() const;
  /// The mask together with every vertex adjacent to it.
  DomainMask closure() const;
  /// True if some inside vertex lies on the outer edge of the grid.
  bool touches_grid_boundary() const;
  bool intersects(const DomainMask& other) const;
  DomainMask operator|(const DomainMask& other) const;
  DomainMask operator&(const DomainMask& other) const;

  /// Inside vertices in increasing linear index.
  std::vector<Vertex> vertices() const;
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& bits() const { return inside_; }

  friend bool operator==(const DomainMask& a, const DomainMask& b) {
    return a.spec_ == b.spec_ && (a.inside_ == b.inside_).all();
  }

 private:
  GridSpec spec_;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> inside_;
};

/// Discretized circle: vertices with r <= |x - z| < r + spacing, in index order.
std::vector<Vertex> circle_band(const GridSpec& spec, const Point& z, double r);

/// Minimum band population for a circle to count as resolved.
inline constexpr std::size_t kMinCircleVertices = 8;

/// circle_band, throwing ResolutionError when it has fewer than
/// kMinCircleVertices vertices.
std::vector<Vertex> resolved_circle_band(const GridSpec& spec, const Point& z, double r);

}  // namespace gfflab
