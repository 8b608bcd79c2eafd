#include "gfflab/field.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "gfflab/dirichlet.hpp"
#include "gfflab/errors.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Orthonormal sine basis of the path-graph Laplacian with Dirichlet ends:
// S(i, k) = sqrt(2 / (m + 1)) sin(pi (i + 1) (k + 1) / (m + 1)).
Eigen::MatrixXd sine_basis(int m) {
  Eigen::MatrixXd s(m, m);
  const double norm = std::sqrt(2.0 / (m + 1));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i) s(i, k) = norm * std::sin(std::numbers::pi * (i + 1) * (k + 1) / (m + 1));
  return s;
}

void check_circle_inside(const GridSpec& spec, const Point& z, double r, double margin) {
  const Point lo = spec.origin;
  const Point hi = spec.origin + spec.spacing * Point(spec.nx - 1, spec.ny - 1);
  const double reach = r + margin;
  if (z.x() - reach < lo.x() || z.y() - reach < lo.y() || z.x() + reach > hi.x() || z.y() + reach > hi.y()) {
    std::ostringstream os;
    os << "circle of radius " << r << " at (" << z.x() << ", " << z.y() << ") does not fit inside the grid with margin "
       << margin;
    throw GeometryError(os.str());
  }
}

}  // namespace

FieldSample constant_field(const GridSpec& spec, double c) {
  spec.validate();
  FieldSample f;
  f.spec = spec;
  f.values = Eigen::ArrayXXd::Constant(spec.nx, spec.ny, c);
  f.kind = FieldKind::custom;
  return f;
}

FieldSample sample_zero_boundary(const GridSpec& spec, std::uint64_t seed) {
  spec.validate();
  FieldSample f;
  f.spec = spec;
  f.seed = seed;
  f.kind = FieldKind::zero_boundary;
  f.values = Eigen::ArrayXXd::Zero(spec.nx, spec.ny);

  const int m = spec.nx - 2;
  const int n = spec.ny - 2;
  if (m <= 0 || n <= 0) return f;

  Eigen::MatrixXd coeff(m, n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < m; ++k) {
      const double lambda = 4.0 - 2.0 * std::cos(std::numbers::pi * (k + 1) / (m + 1)) -
                            2.0 * std::cos(std::numbers::pi * (l + 1) / (n + 1));
      coeff(k, l) = std::sqrt(kTwoPi / lambda) * rng::normal(seed, static_cast<std::uint64_t>(k + Index(m) * l));
    }
  const Eigen::MatrixXd sx = sine_basis(m);
  const Eigen::MatrixXd sy = sine_basis(n);
  f.values.block(1, 1, m, n) = (sx * coeff * sy.transpose()).array();
  return f;
}

FieldSample sample_torus(const GridSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int nx = spec.nx;
  const int ny = spec.ny;
  using Complex = std::complex<double>;

  // Spectral amplitudes sqrt(2 pi / lambda) times complex white noise; the real
  // part of sqrt(N) * IDFT has covariance 2 pi L^+ on the torus.
  Eigen::ArrayXXcd grid(nx, ny);
  for (int l = 0; l < ny; ++l)
    for (int k = 0; k < nx; ++k) {
      if (k == 0 && l == 0) {
        grid(k, l) = 0.0;
        continue;
      }
      const double lambda = 4.0 - 2.0 * std::cos(kTwoPi * k / nx) - 2.0 * std::cos(kTwoPi * l / ny);
      const std::uint64_t slot = 2 * static_cast<std::uint64_t>(k + Index(nx) * l);
      grid(k, l) = std::sqrt(kTwoPi / lambda) * Complex(rng::normal(seed, slot), rng::normal(seed, slot + 1));
    }

  Eigen::FFT<double> fft;
  std::vector<Complex> in, out;
  in.resize(nx);
  for (int l = 0; l < ny; ++l) {
    for (int k = 0; k < nx; ++k) in[k] = grid(k, l);
    fft.inv(out, in);
    for (int k = 0; k < nx; ++k) grid(k, l) = out[k];
  }
  in.resize(ny);
  for (int k = 0; k < nx; ++k) {
    for (int l = 0; l < ny; ++l) in[l] = grid(k, l);
    fft.inv(out, in);
    for (int l = 0; l < ny; ++l) grid(k, l) = out[l];
  }

  FieldSample f;
  f.spec = spec;
  f.seed = seed;
  f.kind = FieldKind::pinned_torus;
  f.values = grid.real() * std::sqrt(static_cast<double>(spec.size()));
  return f;
}

FieldSample sample_pinned(const GridSpec& spec, const Point& center, double radius, std::uint64_t seed) {
  spec.validate();
  if (!(radius > 0.0)) throw ConfigError("pin radius must be positive");
  check_circle_inside(spec, center, radius, 2.0 * spec.spacing);
  FieldSample f = sample_torus(spec, seed);
  const double c = circle_average(f, center, radius);
  f.values -= c;
  f.pin = Pin{center, radius, c};
  return f;
}

double circle_average(const GridSpec& spec, const Eigen::ArrayXXd& values, const Point& z, double r) {
  if (!(r > 0.0)) throw ResolutionError("circle radius must be positive");
  const auto band = resolved_circle_band(spec, z, r);
  // Offsets from the first value keep a constant band exact.
  const double base = values(band.front().i, band.front().j);
  double sum = 0.0;
  for (const Vertex& v : band) sum += values(v.i, v.j) - base;
  return base + sum / static_cast<double>(band.size());
}

FieldSample shifted(const FieldSample& field, double c) {
  FieldSample out = field;
  out.values -= c;
  out.pin.reset();
  return out;
}

Eigen::ArrayXXd harmonic_extension(const FieldSample& field, const DomainMask& mask) {
  return DirichletSolver(mask).extend(field.values);
}

HarmonicDecomposition markov_decomposition(const FieldSample& field, const DirichletSolver& solver, std::uint64_t seed,
                                           double fresh_scale) {
  if (!(solver.mask().spec() == field.spec)) throw DomainError("mask grid does not match field grid");
  return {solver.extend(field.values), solver.sample_fresh(seed, fresh_scale), solver.mask()};
}

HarmonicDecomposition markov_decomposition(const FieldSample& field, const DomainMask& mask, std::uint64_t seed,
                                           double fresh_scale) {
  return markov_decomposition(field, DirichletSolver(mask), seed, fresh_scale);
}

FieldSample resample_inside(const FieldSample& field, const DomainMask& mask, std::uint64_t seed, double fresh_scale) {
  const HarmonicDecomposition parts = markov_decomposition(field, mask, seed, fresh_scale);
  FieldSample out = field;
  out.seed = seed;
  for (int j = 0; j < field.spec.ny; ++j)
    for (int i = 0; i < field.spec.nx; ++i)
      if (mask.contains(Vertex{i, j})) out.values(i, j) = parts.harmonic(i, j) + parts.fresh(i, j);
  if (out.pin) {
    for (const Vertex& v : circle_band(field.spec, out.pin->center, out.pin->radius))
      if (mask.contains(v)) {
        out.pin.reset();
        break;
      }
  }
  return out;
}

double harmonic_fluctuation(const FieldSample& field, const DirichletSolver& disk_solver, const Point& z, double r,
                            double R) {
  if (!(r > 0.0) || !(r < R)) throw ConfigError("harmonic fluctuation needs 0 < r < R");
  const GridSpec& spec = field.spec;
  resolved_circle_band(spec, z, r);
  const double c = circle_average(field, z, R);
  const Eigen::ArrayXXd h = disk_solver.extend(field.values - c);

  const Vertex centre = spec.nearest(z);
  if (!disk_solver.mask().contains(centre)) throw GeometryError("disk centre is not inside the Dirichlet domain");
  const double at_centre = h(centre.i, centre.j);
  double sup = 0.0;
  for (const Vertex& v : DomainMask::disk(spec, z, r).vertices()) {
    if (!disk_solver.mask().contains(v)) throw GeometryError("inner disk is not contained in the Dirichlet domain");
    sup = std::max(sup, std::abs(h(v.i, v.j) - at_centre));
  }
  return sup;
}

double harmonic_fluctuation(const FieldSample& field, const Point& z, double r, double R) {
  return harmonic_fluctuation(field, DirichletSolver(DomainMask::disk(field.spec, z, R)), z, r, R);
}

}  // namespace gfflab
