#include "gfflab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gfflab/errors.hpp"

namespace gfflab {

void GridSpec::validate() const {
  if (nx < 2 || ny < 2) {
    std::ostringstream os;
    os << "grid must have at least 2x2 vertices, got " << nx << "x" << ny;
    throw ConfigError(os.str());
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ConfigError("grid spacing must be positive and finite");
  if (!origin.allFinite()) throw ConfigError("grid origin must be finite");
}

Vertex GridSpec::nearest(const Point& p) const {
  const Point q = (p - origin) / spacing;
  int i = static_cast<int>(std::lround(q.x()));
  int j = static_cast<int>(std::lround(q.y()));
  i = std::clamp(i, 0, nx - 1);
  j = std::clamp(j, 0, ny - 1);
  return {i, j};
}

DomainMask::DomainMask(const GridSpec& spec, bool fill) : spec_(spec), inside_(spec.nx, spec.ny) {
  inside_.setConstant(fill);
}

DomainMask DomainMask::rect(const GridSpec& spec, int i0, int j0, int i1, int j1) {
  DomainMask m(spec);
  for (int j = std::max(j0, 0); j <= std::min(j1, spec.ny - 1); ++j)
    for (int i = std::max(i0, 0); i <= std::min(i1, spec.nx - 1); ++i) m.inside_(i, j) = true;
  return m;
}

DomainMask DomainMask::disk(const GridSpec& spec, const Point& z, double r) {
  DomainMask m(spec);
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) m.inside_(i, j) = (spec.point(i, j) - z).norm() < r;
  return m;
}

DomainMask DomainMask::annulus(const GridSpec& spec, const Point& z, double r_in, double r_out) {
  DomainMask m(spec);
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      const double d = (spec.point(i, j) - z).norm();
      m.inside_(i, j) = d > r_in && d < r_out;
    }
  return m;
}

DomainMask DomainMask::from_vertices(const GridSpec& spec, std::span<const Vertex> vertices) {
  DomainMask m(spec);
  for (const Vertex& v : vertices) {
    if (!spec.contains(v)) throw DomainError("vertex outside grid");
    m.inside_(v.i, v.j) = true;
  }
  return m;
}

DomainMask DomainMask::complement() const {
  DomainMask m(spec_);
  m.inside_ = !inside_;
  return m;
}

DomainMask DomainMask::boundary_layer() const {
  DomainMask m(spec_);
  Vertex nb[4];
  for (int j = 0; j < spec_.ny; ++j)
    for (int i = 0; i < spec_.nx; ++i) {
      if (!inside_(i, j)) continue;
      const int n = neighbours(spec_, {i, j}, nb);
      for (int k = 0; k < n; ++k)
        if (!inside_(nb[k].i, nb[k].j)) {
          m.inside_(i, j) = true;
          break;
        }
    }
  return m;
}

DomainMask DomainMask::closure() const {
  DomainMask m = *this;
  Vertex nb[4];
  for (int j = 0; j < spec_.ny; ++j)
    for (int i = 0; i < spec_.nx; ++i) {
      if (!inside_(i, j)) continue;
      const int n = neighbours(spec_, {i, j}, nb);
      for (int k = 0; k < n; ++k) m.inside_(nb[k].i, nb[k].j) = true;
    }
  return m;
}

bool DomainMask::touches_grid_boundary() const {
  return inside_.row(0).any() || inside_.row(spec_.nx - 1).any() || inside_.col(0).any() ||
         inside_.col(spec_.ny - 1).any();
}

bool DomainMask::intersects(const DomainMask& other) const { return (inside_ && other.inside_).any(); }

DomainMask DomainMask::operator|(const DomainMask& other) const {
  DomainMask m(spec_);
  m.inside_ = inside_ || other.inside_;
  return m;
}

DomainMask DomainMask::operator&(const DomainMask& other) const {
  DomainMask m(spec_);
  m.inside_ = inside_ && other.inside_;
  return m;
}

std::vector<Vertex> DomainMask::vertices() const {
  std::vector<Vertex> out;
  out.reserve(static_cast<std::size_t>(count()));
  for (int j = 0; j < spec_.ny; ++j)
    for (int i = 0; i < spec_.nx; ++i)
      if (inside_(i, j)) out.push_back({i, j});
  return out;
}

std::vector<Vertex> circle_band(const GridSpec& spec, const Point& z, double r) {
  std::vector<Vertex> out;
  const double outer = r + spec.spacing;
  const Point lo = (z - spec.origin) / spec.spacing - Point::Constant(outer / spec.spacing + 1.0);
  const Point hi = (z - spec.origin) / spec.spacing + Point::Constant(outer / spec.spacing + 1.0);
  const int i0 = std::max(0, static_cast<int>(std::floor(lo.x())));
  const int j0 = std::max(0, static_cast<int>(std::floor(lo.y())));
  const int i1 = std::min(spec.nx - 1, static_cast<int>(std::ceil(hi.x())));
  const int j1 = std::min(spec.ny - 1, static_cast<int>(std::ceil(hi.y())));
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) {
      const double d = (spec.point(i, j) - z).norm();
      if (d >= r && d < outer) out.push_back({i, j});
    }
  return out;
}

std::vector<Vertex> resolved_circle_band(const GridSpec& spec, const Point& z, double r) {
  auto band = circle_band(spec, z, r);
  if (band.size() < kMinCircleVertices) {
    std::ostringstream os;
    os << "circle of radius " << r << " at (" << z.x() << ", " << z.y() << ") has only " << band.size()
       << " lattice vertices in its band";
    throw ResolutionError(os.str());
  }
  return band;
}

}  // namespace gfflab
