// Independent reference computations for the test suites. Nothing here calls
// into the library's solvers or samplers.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "gfflab/metric.hpp"

namespace oracle {

/// Dense 5-point Laplacian (diagonal 4) on the (nx-2) x (ny-2) interior
/// vertices, unknown k = (i-1) + (nx-2)(j-1).
inline Eigen::MatrixXd interior_laplacian(int nx, int ny) {
  const int m = nx - 2, n = ny - 2;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m * n, m * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) {
      const int k = i + m * j;
      L(k, k) = 4;
      if (i > 0) L(k, k - 1) = -1;
      if (i + 1 < m) L(k, k + 1) = -1;
      if (j > 0) L(k, k - m) = -1;
      if (j + 1 < n) L(k, k + m) = -1;
    }
  return L;
}

/// 2 pi L^{-1} by dense LU.
inline Eigen::MatrixXd zero_boundary_covariance(int nx, int ny) {
  const Eigen::MatrixXd L = interior_laplacian(nx, ny);
  return 2 * std::numbers::pi * L.fullPivLu().inverse();
}

/// 2 pi times the pseudo-inverse of the periodic Laplacian, index i + nx j.
inline Eigen::MatrixXd torus_covariance(int nx, int ny) {
  const int N = nx * ny;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int k = i + nx * j;
      L(k, k) += 4;
      L(k, (i + 1) % nx + nx * j) -= 1;
      L(k, (i + nx - 1) % nx + nx * j) -= 1;
      L(k, i + nx * ((j + 1) % ny)) -= 1;
      L(k, i + nx * ((j + ny - 1) % ny)) -= 1;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  Eigen::VectorXd inv = es.eigenvalues();
  for (int k = 0; k < N; ++k) inv[k] = inv[k] > 1e-9 ? 1.0 / inv[k] : 0.0;
  return 2 * std::numbers::pi * es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// Minimum over simple lattice paths from u to v (inside `allowed` when
/// given) of the left-to-right floating-point sum of edge weights, starting at
/// the lower-index endpoint.
inline double brute_force_distance(const gfflab::LatticeMetric& m, gfflab::Vertex u, gfflab::Vertex v,
                                   const std::function<bool(gfflab::Vertex)>& allowed = {}) {
  const gfflab::GridSpec& spec = m.spec();
  if (spec.index(v) < spec.index(u)) std::swap(u, v);
  if (u == v) return 0.0;
  std::vector<char> used(static_cast<std::size_t>(spec.size()), 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(gfflab::Vertex, double)> walk = [&](gfflab::Vertex x, double acc) {
    if (x == v) {
      best = std::min(best, acc);
      return;
    }
    const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
    for (int d = 0; d < 4; ++d) {
      const gfflab::Vertex y{x.i + di[d], x.j + dj[d]};
      if (!spec.contains(y) || used[spec.index(y)]) continue;
      if (allowed && !allowed(y)) continue;
      used[spec.index(y)] = 1;
      walk(y, acc + m.weight(x, y));
      used[spec.index(y)] = 0;
    }
  };
  used[spec.index(u)] = 1;
  walk(u, 0.0);
  return best;
}

/// P[Bin(n, p) < a] summed exactly term by term in long double.
inline long double binomial_cdf_below(int n, double p, double a) {
  long double total = 0;
  for (int k = 0; k <= n && k < a; ++k) {
    const long double logc = std::lgammal(n + 1.0L) - std::lgammal(k + 1.0L) - std::lgammal(n - k + 1.0L);
    total += std::exp(logc + k * std::log(static_cast<long double>(p)) + (n - k) * std::log1pl(-static_cast<long double>(p)));
  }
  return std::min<long double>(total, 1);
}

}  // namespace oracle
