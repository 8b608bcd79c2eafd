#include <gtest/gtest.h>

#include <cmath>

#include "gfflab/dirichlet.hpp"
#include "gfflab/errors.hpp"
#include "gfflab/field.hpp"
#include "support/oracles.hpp"

using namespace gfflab;

TEST(Dirichlet, RejectsBadMasks) {
  GridSpec g{10, 10};
  EXPECT_THROW(DirichletSolver(DomainMask(g)), GeometryError);
  EXPECT_THROW(DirichletSolver(DomainMask::full(g)), GeometryError);
  EXPECT_THROW(DirichletSolver(DomainMask::rect(g, 0, 3, 4, 5)), GeometryError);
}

TEST(Dirichlet, ExtensionSolvesDiscreteProblem) {
  GridSpec g{15, 13};
  const DomainMask mask = DomainMask::disk(g, Point(7, 6), 4.5);
  const DirichletSolver solver(mask);
  const FieldSample f = sample_zero_boundary(g, 8);
  const Eigen::ArrayXXd h = solver.extend(f.values);
  for (const Vertex& v : mask.vertices()) {
    const double lap = 4 * h(v.i, v.j) - h(v.i - 1, v.j) - h(v.i + 1, v.j) - h(v.i, v.j - 1) - h(v.i, v.j + 1);
    EXPECT_NEAR(lap, 0.0, 1e-10);
  }
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!mask.contains(Vertex{i, j})) EXPECT_EQ(h(i, j), f(i, j));
}

TEST(Dirichlet, FreshSampleCovarianceMatchesDenseInverse) {
  // A 3x3 block inside a 5x5 grid is exactly the interior of a 5x5 zero
  // boundary problem.
  GridSpec g{7, 7};
  const DomainMask mask = DomainMask::rect(g, 2, 2, 4, 4);
  const DirichletSolver solver(mask);
  const Eigen::MatrixXd cov = oracle::zero_boundary_covariance(5, 5);
  const int n = 30000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(9, 9);
  Eigen::VectorXd x(9);
  for (int s = 0; s < n; ++s) {
    const Eigen::ArrayXXd f = solver.sample_fresh(s);
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) x[i + 3 * j] = f(i + 2, j + 2);
    acc += x * x.transpose();
  }
  acc /= n;
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b)
      EXPECT_NEAR(acc(a, b), cov(a, b), 4 * std::sqrt((cov(a, a) * cov(b, b) + cov(a, b) * cov(a, b)) / n));
}

TEST(Dirichlet, IterativePathAboveDirectLimit) {
  GridSpec g{260, 260};
  const DomainMask mask = DomainMask::rect(g, 1, 1, 258, 258);
  ASSERT_GT(mask.count(), DirichletSolver::kDirectLimit);
  const DirichletSolver solver(mask);
  const FieldSample lin = field_from_function(g, [](const Point& p) { return 0.01 * p.x() + 0.02 * p.y(); });
  EXPECT_LT((solver.extend(lin.values) - lin.values).abs().maxCoeff(), 1e-8);
}
