#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "gfflab/grid.hpp"

namespace gfflab {

/// Discrete Dirichlet problem on a mask V: the unknowns are the values on V,
/// the data are the values on the grid vertices adjacent to V. The operator is
/// the 5-point graph Laplacian restricted to V (diagonal 4).
///
/// Up to kDirectLimit unknowns the system is factored once (sparse Cholesky)
/// and every solve is direct; above it, extensions use conjugate gradient to a
/// relative residual of 1e-12 and each fresh sample factors the system anew.
class DirichletSolver {
 public:
  static constexpr Index kDirectLimit = 256 * 256;

  /// Throws GeometryError if the mask is empty, touches the grid boundary, or
  /// covers the whole grid.
  explicit DirichletSolver(const DomainMask& mask);
  ~DirichletSolver();
  DirichletSolver(DirichletSolver&&) noexcept;
  DirichletSolver& operator=(DirichletSolver&&) noexcept;

  const DomainMask& mask() const { return mask_; }
  Index unknowns() const { return static_cast<Index>(vertex_of_unknown_.size()); }

  /// Harmonic extension: a copy of `values` whose entries on V are replaced by
  /// the solution with boundary data taken from `values` off V.
  Eigen::ArrayXXd extend(const Eigen::ArrayXXd& values) const;

  /// Zero-boundary field on V with covariance 2*pi * L_V^{-1}, times `scale`;
  /// zero off V. Draws are counter-based under `seed`.
  Eigen::ArrayXXd sample_fresh(std::uint64_t seed, double scale = 1.0) const;

  /// The sparse operator L_V in unknown order.
  const Eigen::SparseMatrix<double>& laplacian() const { return laplacian_; }

 private:
  struct Factor;
  static std::unique_ptr<Factor> factorize(const Eigen::SparseMatrix<double>& a);

  DomainMask mask_;
  std::vector<Index> vertex_of_unknown_;
  std::vector<Index> unknown_of_vertex_;
  Eigen::SparseMatrix<double> laplacian_;
  std::unique_ptr<Factor> factor_;
};

}  // namespace gfflab
