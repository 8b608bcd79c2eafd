#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "gfflab/grid.hpp"

namespace gfflab {

class DirichletSolver;

enum class FieldKind : std::uint8_t {
  zero_boundary = 0,
  /// Mean-zero torus field standing in for a whole-plane field modulo
  /// constants; an approximation, since the whole-plane field is not
  /// realizable on a finite grid.
  pinned_torus = 1,
  /// Built by hand (constants, test fixtures, loaded data).
  custom = 2,
};

/// Normalization applied to a field: `subtracted` was removed from every
/// value so that the circle average at (center, radius) vanishes.
struct Pin {
  Point center = Point::Zero();
  double radius = 0.0;
  double subtracted = 0.0;
};

/// A scalar field on a rectangular lattice. `values(i, j)` is the value at
/// vertex (i, j).
struct FieldSample {
  GridSpec spec;
  Eigen::ArrayXXd values;
  std::optional<Pin> pin;
  std::uint64_t seed = 0;
  FieldKind kind = FieldKind::custom;

  double operator()(Vertex v) const { return values(v.i, v.j); }
  double operator()(int i, int j) const { return values(i, j); }
};

/// Custom field with every value equal to c.
FieldSample constant_field(const GridSpec& spec, double c);

/// Custom field with values f(point(i, j)).
template <typename F>
FieldSample field_from_function(const GridSpec& spec, F&& f) {
  FieldSample out = constant_field(spec, 0.0);
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) out.values(i, j) = f(spec.point(i, j));
  return out;
}

/// Zero-boundary discrete GFF: covariance 2*pi times the inverse of the
/// interior 5-point Laplacian (diagonal 4), exact via the sine eigenbasis.
FieldSample sample_zero_boundary(const GridSpec& spec, std::uint64_t seed);

/// Mean-zero Gaussian field on the nx-by-ny torus with covariance 2*pi times
/// the pseudo-inverse of the periodic 5-point Laplacian (zero mode dropped).
FieldSample sample_torus(const GridSpec& spec, std::uint64_t seed);

/// sample_torus, then subtract the circle average at (center, radius).
/// The circle must sit at least 2 lattice steps inside the grid.
FieldSample sample_pinned(const GridSpec& spec, const Point& center, double radius, std::uint64_t seed);

/// Mean of the field over circle_band(z, r). Throws ResolutionError if the
/// band holds fewer than 8 vertices.
double circle_average(const GridSpec& spec, const Eigen::ArrayXXd& values, const Point& z, double r);
inline double circle_average(const FieldSample& field, const Point& z, double r) {
  return circle_average(field.spec, field.values, z, r);
}

/// Copy of the field with `c` subtracted everywhere (pin metadata dropped).
FieldSample shifted(const FieldSample& field, double c);

/// Markov decomposition of a field on a mask V: `harmonic` is the discrete
/// harmonic extension into V of the values outside V (equal to the field
/// off V); `fresh` is a zero-boundary field supported on V.
struct HarmonicDecomposition {
  Eigen::ArrayXXd harmonic;
  Eigen::ArrayXXd fresh;
  DomainMask mask;
};

/// Discrete Dirichlet problem on the mask with boundary data from the field
/// just outside it. Returns a full-grid array equal to the field off the mask.
Eigen::ArrayXXd harmonic_extension(const FieldSample& field, const DomainMask& mask);

/// Harmonic part plus a fresh zero-boundary sample on the mask. `fresh_scale`
/// multiplies the fresh part (0 forces it to vanish).
HarmonicDecomposition markov_decomposition(const FieldSample& field, const DomainMask& mask, std::uint64_t seed,
                                           double fresh_scale = 1.0);
HarmonicDecomposition markov_decomposition(const FieldSample& field, const DirichletSolver& solver,
                                           std::uint64_t seed, double fresh_scale = 1.0);

/// Field equal to the input off the mask and harmonic + fresh on it. Values
/// off the mask are copied bit for bit. The pin is kept only if its circle
/// band misses the mask.
FieldSample resample_inside(const FieldSample& field, const DomainMask& mask, std::uint64_t seed,
                            double fresh_scale = 1.0);

/// sup over lattice vertices x with |x - z| < r of |H(x) - H(z*)|, where H is
/// the harmonic extension of (field - h_R(z)) into the open disk B_R(z) and z*
/// is the vertex nearest z.
double harmonic_fluctuation(const FieldSample& field, const Point& z, double r, double R);
/// Same, reusing a solver built for DomainMask::disk(spec, z, R).
double harmonic_fluctuation(const FieldSample& field, const DirichletSolver& disk_solver, const Point& z, double r,
                            double R);

}  // namespace gfflab
