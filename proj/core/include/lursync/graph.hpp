#pragma once

// Weighted undirected graphs whose links are either deterministic or carry
// zero-mean i.i.d. weight noise, plus the spectral quantities the
// synchronization conditions are stated in. Laplacians use the positive
// semidefinite convention: diagonal = sum of incident weights, off-diagonal =
// -weight. Node indices are zero-based.

#include "lursync/linalg.hpp"

#include <cstddef>
#include <vector>

namespace lursync {

struct DeterministicEdge {
  int i = 0;
  int j = 0;
  double mu = 1.0;
  friend bool operator==(const DeterministicEdge&, const DeterministicEdge&) = default;
};

struct UncertainEdge {
  int i = 0;
  int j = 0;
  double mu = 1.0;
  double sigma_sq = 0.0;
  friend bool operator==(const UncertainEdge&, const UncertainEdge&) = default;
};

/// Nodes plus disjoint sets of deterministic and uncertain links.
/// Edges are stored with i < j. All mean weights are positive, no self
/// loops, no edge appears twice.
class UncertainGraph {
 public:
  UncertainGraph(int n_nodes, std::vector<DeterministicEdge> det_edges,
                 std::vector<UncertainEdge> unc_edges);

  int n_nodes() const { return n_nodes_; }
  const std::vector<DeterministicEdge>& det_edges() const { return det_; }
  const std::vector<UncertainEdge>& unc_edges() const { return unc_; }

  /// max over uncertain links of sigma^2 / mu (0 when there are none).
  double gamma_bar() const;

  /// Copy with every uncertain link's variance set to gamma * mu.
  UncertainGraph with_uniform_cod(double gamma) const;
  /// Copy with every uncertain link's variance set to sigma_sq.
  UncertainGraph with_uniform_variance(double sigma_sq) const;

 private:
  int n_nodes_;
  std::vector<DeterministicEdge> det_;
  std::vector<UncertainEdge> unc_;
};

struct GraphSpectra {
  double lambda2 = 0.0;    // Fiedler eigenvalue of the nominal Laplacian
  double lambdaN = 0.0;    // largest eigenvalue of the nominal Laplacian
  double lambda2_d = 0.0;  // second smallest eigenvalue of the deterministic part
  double lambdaN_u = 0.0;  // largest eigenvalue of the uncertain part
  double tau = 0.0;        // lambdaN_u / (lambdaN_u + lambda2_d); 0 without uncertain links
  double gamma_bar = 0.0;  // maximal coefficient of dispersion over uncertain links
};

/// lambda2 below this value means the nominal graph is disconnected.
inline constexpr double kConnectivityThreshold = 1e-8;

/// Nominal Laplacian (uncertain links contribute their mean weight).
SymMatrix laplacian(const UncertainGraph& g);

struct LaplacianSplit {
  SymMatrix deterministic;
  SymMatrix uncertain;
};
LaplacianSplit split_laplacians(const UncertainGraph& g);

/// Incidence vector: +1 at i, -1 at j, 0 elsewhere.
Vector edge_vector(int i, int j, int n_nodes);

/// Orthonormal N x (N-1) basis of the complement of the all-ones direction,
/// taken from the Householder reflector that maps e_1 onto 1/sqrt(N).
Matrix sync_complement(int n_nodes);

/// Throws InputError when the nominal graph is disconnected.
GraphSpectra spectra(const UncertainGraph& g);

// ---------------------------------------------------------------------------
// Torus networks

/// d-dimensional periodic lattice with N agents per dimension. Along every
/// dimension each agent is linked to all agents within ring distance k, so
/// k = N/2 (N even) or k = (N-1)/2 (N odd) makes every ring complete.
struct TorusSpec {
  int N = 2;
  int k = 1;
  int d = 1;

  void validate() const;
  std::size_t node_count() const;  // N^d, throws on overflow
  friend bool operator==(const TorusSpec&, const TorusSpec&) = default;
};

/// Eigenvalues of the 1-D ring Laplacian, indexed by Fourier mode j = 0..N-1:
/// lambda_j = sum_{m=1..k} c_m (1 - cos(2 pi j m / N)), c_m = 2 except c_m = 1
/// when 2m == N (the antipodal agent is a single neighbour).
std::vector<double> ring_eigenvalues(int N, int k);

/// 1-D ring Laplacian L_{N,k,1}.
SymMatrix ring_laplacian(int N, int k);

struct TorusLaplacian {
  SymMatrix matrix;
  std::vector<double> eigenvalues;  // ascending multiset, analytic
};

/// Materialized Kronecker-sum Laplacian plus analytic spectrum. Refuses
/// N^d > max_order; use torus_extreme_eigs or torus_eigenvalues instead.
TorusLaplacian torus_laplacian(const TorusSpec& spec, std::size_t max_order = 4096);

/// Analytic eigenvalue multiset (all d-fold sums of ring eigenvalues), ascending.
std::vector<double> torus_eigenvalues(const TorusSpec& spec, std::size_t max_count = 1u << 20);

/// Distinct nonzero analytic eigenvalues, ascending. Values closer than
/// 1e-9 (relative) are merged.
std::vector<double> torus_distinct_nonzero_eigenvalues(const TorusSpec& spec,
                                                       std::size_t max_count = 100000);

struct TorusExtremes {
  double lambda2 = 0.0;
  double lambdaN = 0.0;
};

/// (lambda2 of the ring, d * lambdaN of the ring); no matrix is built.
TorusExtremes torus_extreme_eigs(const TorusSpec& spec);

/// Materialize a torus as an UncertainGraph whose links all carry mean mu and
/// variance sigma_sq. Node index = sum_t coord_t * N^t.
UncertainGraph torus_graph(const TorusSpec& spec, double mu, double sigma_sq,
                           std::size_t max_nodes = 4096);

}  // namespace lursync
