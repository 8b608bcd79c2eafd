#include "gfflab/dirichlet.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "gfflab/errors.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

struct DirichletSolver::Factor {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

std::unique_ptr<DirichletSolver::Factor> DirichletSolver::factorize(const Eigen::SparseMatrix<double>& a) {
  auto f = std::make_unique<DirichletSolver::Factor>();
  f->llt.compute(a);
  if (f->llt.info() != Eigen::Success) throw NumericalError("sparse Cholesky factorization of the Dirichlet Laplacian failed");
  return f;
}

DirichletSolver::DirichletSolver(const DomainMask& mask) : mask_(mask) {
  const GridSpec& spec = mask.spec();
  if (mask.empty()) throw GeometryError("Dirichlet domain is empty");
  if (mask.count() == spec.size()) throw GeometryError("Dirichlet domain covers the whole grid: no boundary data");
  if (mask.touches_grid_boundary())
    throw GeometryError("Dirichlet domain must lie in the grid interior (it touches the outer edge)");

  unknown_of_vertex_.assign(static_cast<std::size_t>(spec.size()), -1);
  for (Index k = 0; k < spec.size(); ++k)
    if (mask.contains(k)) {
      unknown_of_vertex_[k] = static_cast<Index>(vertex_of_unknown_.size());
      vertex_of_unknown_.push_back(k);
    }

  const Index n = unknowns();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(5 * n));
  Vertex nb[4];
  for (Index u = 0; u < n; ++u) {
    entries.emplace_back(u, u, 4.0);
    const int m = neighbours(spec, spec.vertex(vertex_of_unknown_[u]), nb);
    for (int k = 0; k < m; ++k) {
      const Index w = unknown_of_vertex_[spec.index(nb[k])];
      if (w >= 0) entries.emplace_back(u, w, -1.0);
    }
  }
  laplacian_.resize(n, n);
  laplacian_.setFromTriplets(entries.begin(), entries.end());
  laplacian_.makeCompressed();

  if (n <= kDirectLimit) factor_ = factorize(laplacian_);
}

DirichletSolver::~DirichletSolver() = default;
DirichletSolver::DirichletSolver(DirichletSolver&&) noexcept = default;
DirichletSolver& DirichletSolver::operator=(DirichletSolver&&) noexcept = default;

Eigen::ArrayXXd DirichletSolver::extend(const Eigen::ArrayXXd& values) const {
  const GridSpec& spec = mask_.spec();
  if (values.rows() != spec.nx || values.cols() != spec.ny) throw DomainError("field shape does not match the mask grid");

  const Index n = unknowns();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  Vertex nb[4];
  for (Index u = 0; u < n; ++u) {
    const int m = neighbours(spec, spec.vertex(vertex_of_unknown_[u]), nb);
    for (int k = 0; k < m; ++k)
      if (unknown_of_vertex_[spec.index(nb[k])] < 0) rhs[u] += values(nb[k].i, nb[k].j);
  }

  Eigen::VectorXd x;
  if (factor_) {
    x = factor_->llt.solve(rhs);
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-12);
    cg.setMaxIterations(20 * static_cast<int>(std::sqrt(static_cast<double>(n))) + 1000);
    cg.compute(laplacian_);
    x = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
      throw NumericalError("conjugate gradient did not reach 1e-12 on the Dirichlet problem");
  }

  Eigen::ArrayXXd out = values;
  double* data = out.data();
  for (Index u = 0; u < n; ++u) data[vertex_of_unknown_[u]] = x[u];
  return out;
}

Eigen::ArrayXXd DirichletSolver::sample_fresh(std::uint64_t seed, double scale) const {
  const Index n = unknowns();
  Eigen::VectorXd z(n);
  for (Index u = 0; u < n; ++u) z[u] = rng::normal(seed, static_cast<std::uint64_t>(u));

  // With P A P^T = L L^T, x = P^T L^{-T} z has covariance A^{-1}.
  std::unique_ptr<Factor> local;
  const Factor* f = factor_.get();
  if (!f) {
    local = factorize(laplacian_);
    f = local.get();
  }
  Eigen::VectorXd y = f->llt.matrixU().solve(z);
  Eigen::VectorXd x = f->llt.permutationPinv() * y;
  x *= scale * std::sqrt(2.0 * std::numbers::pi);

  const GridSpec& spec = mask_.spec();
  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(spec.nx, spec.ny);
  double* data = out.data();
  for (Index u = 0; u < n; ++u) data[vertex_of_unknown_[u]] = x[u];
  return out;
}

}  // namespace gfflab
