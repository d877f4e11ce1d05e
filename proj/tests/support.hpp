#pragma once

// Hand-rolled seeded generators shared by the unit and acceptance tests.

#include "lursync/graph.hpp"
#include "lursync/linalg.hpp"
#include "lursync/prl.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace lursync::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    }
    return m;
  }

  Vector vector(Eigen::Index n) { return matrix(n, 1).col(0); }

  /// Q diag(eigs) Q' with eigenvalues in [lo, hi].
  SymMatrix spd(Eigen::Index n, double lo = 0.5, double hi = 3.0) {
    const Eigen::HouseholderQR<Matrix> qr(matrix(n, n));
    const Matrix q = qr.householderQ();
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = uniform(lo, hi);
    return SymMatrix(q * d.asDiagonal() * q.transpose());
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Single-output Lur'e component with spectral radius in [0.7, 1.05],
/// so that coupling matters. Coupling G = g C' comes with it.
struct CoupledSystem {
  LureSystem sys;
  Matrix G;
};

inline CoupledSystem random_coupled_system(Gen& gen, Eigen::Index n) {
  CoupledSystem out;
  const double radius = gen.uniform(0.7, 1.05);
  Matrix a = gen.matrix(n, n);
  const Vector ev = a.eigenvalues().cwiseAbs();
  a *= radius / std::max(ev.maxCoeff(), 1e-6);
  Matrix c = gen.matrix(1, n);
  c /= c.norm();
  const double d = gen.uniform(1.0, 4.0);
  out.sys = LureSystem{a, c.transpose() * gen.uniform(0.1, 0.6), c, Matrix::Constant(1, 1, d),
                       Matrix::Constant(1, 1, d)};
  out.G = gen.uniform(0.05, 0.3) * c.transpose();
  return out;
}

/// Connected graph on n nodes: random spanning tree plus extra links. Each
/// link is uncertain with probability p_unc and then carries variance
/// cod * mu.
inline UncertainGraph random_connected_graph(Gen& gen, int n, double p_extra, double p_unc, double cod) {
  std::vector<std::pair<int, int>> links;
  for (int v = 1; v < n; ++v) links.emplace_back(gen.integer(0, v - 1), v);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      bool present = false;
      for (const auto& [a, b] : links) present = present || (std::min(a, b) == i && std::max(a, b) == j);
      if (!present && gen.coin(p_extra)) links.emplace_back(i, j);
    }
  }
  std::vector<DeterministicEdge> det;
  std::vector<UncertainEdge> unc;
  for (const auto& [a, b] : links) {
    const double mu = gen.uniform(0.5, 1.5);
    if (gen.coin(p_unc)) {
      unc.push_back({a, b, mu, cod * mu});
    } else {
      det.push_back({a, b, mu});
    }
  }
  if (unc.empty()) {
    // Keep at least one uncertain link so variance rays are meaningful.
    const auto e = det.back();
    det.pop_back();
    unc.push_back({e.i, e.j, e.mu, cod * e.mu});
  }
  return UncertainGraph(n, std::move(det), std::move(unc));
}

}  // namespace lursync::testing
