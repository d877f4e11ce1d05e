#include "lursync/graph.hpp"

#include "lursync/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

namespace lursync {

namespace {

void check_endpoint(int node, int n_nodes) {
  if (node < 0 || node >= n_nodes) {
    std::ostringstream os;
    os << "edge endpoint " << node << " outside [0, " << n_nodes << ")";
    throw InputError(os.str());
  }
}

void add_edge(Matrix& l, int i, int j, double w) {
  l(i, i) += w;
  l(j, j) += w;
  l(i, j) -= w;
  l(j, i) -= w;
}

}  // namespace

UncertainGraph::UncertainGraph(int n_nodes, std::vector<DeterministicEdge> det_edges,
                               std::vector<UncertainEdge> unc_edges)
    : n_nodes_(n_nodes), det_(std::move(det_edges)), unc_(std::move(unc_edges)) {
  if (n_nodes_ < 1) throw InputError("graph must have at least one node");

  std::set<std::pair<int, int>> seen;
  auto register_edge = [&](int& i, int& j, double mu) {
    check_endpoint(i, n_nodes_);
    check_endpoint(j, n_nodes_);
    if (i == j) {
      std::ostringstream os;
      os << "self-loop at node " << i;
      throw InputError(os.str());
    }
    if (!(mu > 0.0) || !std::isfinite(mu)) {
      std::ostringstream os;
      os << "edge (" << i << "," << j << ") has non-positive mean weight " << mu;
      throw InputError(os.str());
    }
    if (i > j) std::swap(i, j);
    if (!seen.emplace(i, j).second) {
      std::ostringstream os;
      os << "duplicate edge (" << i << "," << j << ")";
      throw InputError(os.str());
    }
  };
  for (auto& e : det_) register_edge(e.i, e.j, e.mu);
  for (auto& e : unc_) {
    register_edge(e.i, e.j, e.mu);
    if (!(e.sigma_sq >= 0.0) || !std::isfinite(e.sigma_sq)) {
      std::ostringstream os;
      os << "edge (" << e.i << "," << e.j << ") has invalid variance " << e.sigma_sq;
      throw InputError(os.str());
    }
  }
}

double UncertainGraph::gamma_bar() const {
  double g = 0.0;
  for (const auto& e : unc_) g = std::max(g, e.sigma_sq / e.mu);
  return g;
}

UncertainGraph UncertainGraph::with_uniform_cod(double gamma) const {
  if (!(gamma >= 0.0)) throw InputError("coefficient of dispersion must be non-negative");
  auto unc = unc_;
  for (auto& e : unc) e.sigma_sq = gamma * e.mu;
  return UncertainGraph(n_nodes_, det_, std::move(unc));
}

UncertainGraph UncertainGraph::with_uniform_variance(double sigma_sq) const {
  if (!(sigma_sq >= 0.0)) throw InputError("variance must be non-negative");
  auto unc = unc_;
  for (auto& e : unc) e.sigma_sq = sigma_sq;
  return UncertainGraph(n_nodes_, det_, std::move(unc));
}

SymMatrix laplacian(const UncertainGraph& g) {
  const auto split = split_laplacians(g);
  return split.deterministic + split.uncertain;
}

LaplacianSplit split_laplacians(const UncertainGraph& g) {
  const int n = g.n_nodes();
  Matrix ld = Matrix::Zero(n, n);
  Matrix lu = Matrix::Zero(n, n);
  for (const auto& e : g.det_edges()) add_edge(ld, e.i, e.j, e.mu);
  for (const auto& e : g.unc_edges()) add_edge(lu, e.i, e.j, e.mu);
  return {SymMatrix(ld), SymMatrix(lu)};
}

Vector edge_vector(int i, int j, int n_nodes) {
  check_endpoint(i, n_nodes);
  check_endpoint(j, n_nodes);
  if (i == j) {
    std::ostringstream os;
    os << "edge_vector: invalid edge (" << i << "," << j << ")";
    throw InputError(os.str());
  }
  Vector l = Vector::Zero(n_nodes);
  l(i) = 1.0;
  l(j) = -1.0;
  return l;
}

Matrix sync_complement(int n_nodes) {
  if (n_nodes < 2) throw InputError("sync_complement: need at least two nodes");
  const Vector u = Vector::Constant(n_nodes, 1.0 / std::sqrt(static_cast<double>(n_nodes)));
  Vector v = -u;
  v(0) += 1.0;
  const double vv = v.squaredNorm();
  Matrix h = Matrix::Identity(n_nodes, n_nodes) - (2.0 / vv) * v * v.transpose();
  return h.rightCols(n_nodes - 1);
}

GraphSpectra spectra(const UncertainGraph& g) {
  if (g.n_nodes() < 2) throw InputError("cannot synchronize a network with fewer than two nodes");
  const auto split = split_laplacians(g);
  const Vector nominal = sym_eigenvalues(split.deterministic + split.uncertain);
  const Eigen::Index n = nominal.size();

  GraphSpectra s;
  s.lambda2 = nominal(1);
  s.lambdaN = nominal(n - 1);
  if (!(s.lambda2 > kConnectivityThreshold)) {
    std::ostringstream os;
    os << "cannot synchronize a disconnected network (lambda2 = " << s.lambda2 << ")";
    throw InputError(os.str());
  }
  s.lambda2_d = std::max(0.0, sym_eigenvalues(split.deterministic)(1));
  s.lambdaN_u = g.unc_edges().empty() ? 0.0 : std::max(0.0, max_eigenvalue(split.uncertain));
  s.tau = s.lambdaN_u > 0.0 ? s.lambdaN_u / (s.lambdaN_u + s.lambda2_d) : 0.0;
  s.gamma_bar = g.gamma_bar();
  return s;
}

// ---------------------------------------------------------------------------

void TorusSpec::validate() const {
  std::ostringstream os;
  if (N < 2) {
    os << "torus: N = " << N << " must be at least 2";
  } else if (k < 1 || k > N / 2) {
    os << "torus: k = " << k << " outside [1, " << N / 2 << "] for N = " << N;
  } else if (d < 1) {
    os << "torus: dimension d = " << d << " must be at least 1";
  } else {
    return;
  }
  throw InputError(os.str());
}

std::size_t TorusSpec::node_count() const {
  validate();
  std::size_t count = 1;
  for (int t = 0; t < d; ++t) {
    if (count > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(N)) {
      throw InputError("torus: N^d overflows");
    }
    count *= static_cast<std::size_t>(N);
  }
  return count;
}

std::vector<double> ring_eigenvalues(int N, int k) {
  TorusSpec{N, k, 1}.validate();
  std::vector<double> out(static_cast<std::size_t>(N), 0.0);
  for (int j = 0; j < N; ++j) {
    double sum = 0.0;
    for (int m = 1; m <= k; ++m) {
      const double weight = (2 * m == N) ? 1.0 : 2.0;
      sum += weight * (1.0 - std::cos(2.0 * std::numbers::pi * j * m / N));
    }
    out[static_cast<std::size_t>(j)] = sum;
  }
  return out;
}

SymMatrix ring_laplacian(int N, int k) {
  TorusSpec{N, k, 1}.validate();
  Matrix l = Matrix::Zero(N, N);
  for (int u = 0; u < N; ++u) {
    for (int m = 1; m <= k; ++m) {
      const int v = (u + m) % N;
      if (2 * m == N && v < u) continue;  // antipodal pair already added from v
      add_edge(l, u, v, 1.0);
    }
  }
  return SymMatrix(l);
}

TorusLaplacian torus_laplacian(const TorusSpec& spec, std::size_t max_order) {
  const std::size_t order = spec.node_count();
  if (order > max_order) {
    std::ostringstream os;
    os << "torus: refusing to materialize a Laplacian of order " << order << " (limit " << max_order
       << "); use eigenvalue-only mode (torus_extreme_eigs / torus_eigenvalues)";
    throw InputError(os.str());
  }
  const Matrix l1 = ring_laplacian(spec.N, spec.k).matrix();
  const auto n = static_cast<Eigen::Index>(spec.N);
  const auto total = static_cast<Eigen::Index>(order);
  Matrix l = Matrix::Zero(total, total);
  Eigen::Index inner = 1;  // N^i
  for (int i = 0; i < spec.d; ++i) {
    const Eigen::Index outer = total / (inner * n);  // N^{d-1-i}
    l += kron(kron(Matrix::Identity(outer, outer), l1), Matrix::Identity(inner, inner));
    inner *= n;
  }
  return {SymMatrix(l), torus_eigenvalues(spec)};
}

std::vector<double> torus_eigenvalues(const TorusSpec& spec, std::size_t max_count) {
  const std::size_t count = spec.node_count();
  if (count > max_count) {
    std::ostringstream os;
    os << "torus: eigenvalue multiset has " << count << " entries (limit " << max_count << ")";
    throw InputError(os.str());
  }
  const auto ring = ring_eigenvalues(spec.N, spec.k);
  std::vector<double> values{0.0};
  for (int t = 0; t < spec.d; ++t) {
    std::vector<double> next;
    next.reserve(values.size() * ring.size());
    for (double v : values) {
      for (double r : ring) next.push_back(v + r);
    }
    values = std::move(next);
  }
  std::sort(values.begin(), values.end());
  return values;
}

namespace {

std::vector<double> merge_close(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (!out.empty() && std::abs(x - out.back()) <= 1e-9 * std::max(1.0, std::abs(x))) continue;
    out.push_back(x);
  }
  return out;
}

}  // namespace

std::vector<double> torus_distinct_nonzero_eigenvalues(const TorusSpec& spec, std::size_t max_count) {
  spec.validate();
  const auto ring = merge_close(ring_eigenvalues(spec.N, spec.k));
  std::vector<double> sums{0.0};
  for (int t = 0; t < spec.d; ++t) {
    std::vector<double> next;
    next.reserve(sums.size() * ring.size());
    for (double v : sums) {
      for (double r : ring) next.push_back(v + r);
    }
    sums = merge_close(std::move(next));
    if (sums.size() > max_count) {
      std::ostringstream os;
      os << "torus: more than " << max_count << " distinct eigenvalues";
      throw InputError(os.str());
    }
  }
  // The only zero sum is the all-zero mode; ring eigenvalues are otherwise >= lambda2 > 0.
  std::erase_if(sums, [](double x) { return x <= 1e-12; });
  return sums;
}

TorusExtremes torus_extreme_eigs(const TorusSpec& spec) {
  spec.validate();
  auto ring = ring_eigenvalues(spec.N, spec.k);
  std::sort(ring.begin(), ring.end());
  return {ring[1], spec.d * ring.back()};
}

UncertainGraph torus_graph(const TorusSpec& spec, double mu, double sigma_sq, std::size_t max_nodes) {
  const std::size_t count = spec.node_count();
  if (count > max_nodes) {
    std::ostringstream os;
    os << "torus: refusing to materialize " << count << " nodes (limit " << max_nodes << ")";
    throw InputError(os.str());
  }
  std::set<std::pair<int, int>> pairs;
  const int n_nodes = static_cast<int>(count);
  for (int u = 0; u < n_nodes; ++u) {
    int stride = 1;
    for (int t = 0; t < spec.d; ++t) {
      const int coord = (u / stride) % spec.N;
      for (int m = 1; m <= spec.k; ++m) {
        const int v = u + (((coord + m) % spec.N) - coord) * stride;
        pairs.emplace(std::min(u, v), std::max(u, v));
      }
      stride *= spec.N;
    }
  }
  std::vector<UncertainEdge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) edges.push_back({i, j, mu, sigma_sq});
  return UncertainGraph(n_nodes, {}, std::move(edges));
}

}  // namespace lursync
