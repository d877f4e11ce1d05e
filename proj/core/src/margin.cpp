#include "lursync/margin.hpp"

#include "lursync/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace lursync {

SmallGainCertificate small_gain_margin(const RiccatiProblem& problem,
                                       std::span<const Matrix> noise_dirs, const SymMatrix& P,
                                       double sigma_sq) {
  const Eigen::Index n = problem.a.rows();
  if (P.order() != n) throw InputError("small gain: P does not match the problem order");
  if (!(std::isfinite(sigma_sq) && sigma_sq >= 0.0)) {
    throw InputError("small gain: variance must be nonnegative");
  }
  if (!is_positive_definite(P)) throw InputError("small gain: P is not positive definite");

  const Matrix p_inv = P.matrix().llt().solve(Matrix::Identity(n, n));
  const Matrix sigma_inv =
      problem.sigma.matrix().llt().solve(Matrix::Identity(problem.sigma.order(), problem.sigma.order()));
  const SymMatrix s(p_inv - problem.b * sigma_inv * problem.b.transpose());
  if (!is_positive_definite(s)) {
    std::ostringstream os;
    os << "small gain: S = P^-1 - B Sigma1^-1 B' is not positive definite (smallest eigenvalue "
       << min_eigenvalue(s) << ")";
    throw InputError(os.str());
  }
  const Matrix s_inv = s.matrix().llt().solve(Matrix::Identity(n, n));
  const SymMatrix t(P.matrix() - problem.q.matrix());
  const SymMatrix core(t.matrix() - problem.a.transpose() * s_inv * problem.a);
  if (!is_positive_definite(core)) {
    std::ostringstream os;
    os << "small gain: T - A' S^-1 A is not positive definite (smallest eigenvalue "
       << min_eigenvalue(core) << ")";
    throw InputError(os.str());
  }

  const Matrix w = sym_inv_sqrt(core).matrix();
  const Matrix s_half = sym_inv_sqrt(s).matrix();
  Matrix m(static_cast<Eigen::Index>(noise_dirs.size()) * n, n);
  for (std::size_t k = 0; k < noise_dirs.size(); ++k) {
    if (noise_dirs[k].rows() != n || noise_dirs[k].cols() != n) {
      throw InputError("small gain: noise direction does not match the problem order");
    }
    m.middleRows(static_cast<Eigen::Index>(k) * n, n) = s_half * noise_dirs[k] * w;
  }

  SmallGainCertificate c;
  c.rho = noise_dirs.empty() ? 0.0 : spectral_norm(m);
  c.sigma_critical_sq = c.rho > 0.0 ? 1.0 / (c.rho * c.rho) : std::numeric_limits<double>::infinity();
  c.holds = sigma_sq * c.rho * c.rho < 1.0;
  return c;
}

SmallGainCertificate small_gain_margin(const FullSyncProblem& problem, const SymMatrix& P,
                                       double sigma_sq) {
  return small_gain_margin(problem.riccati, problem.noise_dirs, P, sigma_sq);
}

// ---------------------------------------------------------------------------

void ScalarTorusParams::validate() const {
  if (!(std::isfinite(a) && std::isfinite(delta) && std::isfinite(g) && std::isfinite(mu) &&
        std::isfinite(sigma_sq))) {
    throw InputError("scalar torus parameters must be finite");
  }
  if (!(delta > 1.0)) throw InputError("scalar torus: delta must exceed 1");
  if (!(mu > 0.0)) throw InputError("scalar torus: mu must be positive");
  if (sigma_sq < 0.0) throw InputError("scalar torus: sigma_sq must be nonnegative");
}

double alpha_sq(const ScalarTorusParams& p, double lambda) {
  const double mean = p.a0() - p.mu * lambda * p.g;
  return mean * mean + p.sigma_sq * lambda * lambda * p.g * p.g;
}

TorusMargin scalar_torus_margin(const ScalarTorusParams& p, const TorusSpec& spec) {
  p.validate();
  spec.validate();
  const TorusExtremes ext = torus_extreme_eigs(spec);

  TorusMargin m;
  m.lambda2 = ext.lambda2;
  m.lambdaN = ext.lambdaN;
  m.alpha_sq_2 = alpha_sq(p, ext.lambda2);
  m.alpha_sq_N = alpha_sq(p, ext.lambdaN);
  m.lambda_sup = m.alpha_sq_N > m.alpha_sq_2 ? ext.lambdaN : ext.lambda2;

  const double mean = p.a0() - p.mu * m.lambda_sup * p.g;
  const double denom = p.bound() - mean * mean;
  m.deterministic_feasible = denom > 0.0;
  if (m.deterministic_feasible) {
    m.rho_sm = 1.0 - p.sigma_sq * m.lambda_sup * m.lambda_sup * p.g * p.g / denom;
  }
  return m;
}

bool scalar_torus_feasible(const ScalarTorusParams& p, const TorusSpec& spec) {
  const TorusMargin m = scalar_torus_margin(p, spec);
  return p.bound() > std::max(m.alpha_sq_2, m.alpha_sq_N);
}

std::vector<SweepCell> torus_sweep(const ScalarTorusParams& p, int N, int k_min, int k_max,
                                   int d_min, int d_max) {
  p.validate();
  if (k_min > k_max || d_min > d_max) throw InputError("torus sweep: empty k or d range");
  std::vector<SweepCell> cells;
  cells.reserve(static_cast<std::size_t>(k_max - k_min + 1) * static_cast<std::size_t>(d_max - d_min + 1));
  for (int d = d_min; d <= d_max; ++d) {
    for (int k = k_min; k <= k_max; ++k) {
      const TorusSpec spec{N, k, d};
      SweepCell cell;
      cell.d = d;
      cell.k = k;
      cell.margin = scalar_torus_margin(p, spec);
      cell.feasible = p.bound() > std::max(cell.margin.alpha_sq_2, cell.margin.alpha_sq_N);
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepCell> cells) {
  os << "d,k,rho_sm,feasible\n";
  std::ostringstream row;
  row << std::setprecision(12);
  for (const SweepCell& c : cells) {
    row.str("");
    row << c.d << ',' << c.k << ',';
    if (std::isnan(c.margin.rho_sm)) {
      row << "nan";
    } else {
      row << c.margin.rho_sm;
    }
    row << ',' << (c.feasible ? 1 : 0) << '\n';
    os << row.str();
  }
}

std::vector<SweepOptimum> sweep_optima(std::span<const SweepCell> cells) {
  std::vector<SweepOptimum> out;
  for (const SweepCell& c : cells) {
    if (out.empty() || out.back().d != c.d) out.push_back(SweepOptimum{c.d, std::nullopt, std::nan("")});
    SweepOptimum& o = out.back();
    if (std::isnan(c.margin.rho_sm)) continue;
    if (!o.k || c.margin.rho_sm > o.rho_sm || (c.margin.rho_sm == o.rho_sm && c.k < *o.k)) {
      o.k = c.k;
      o.rho_sm = c.margin.rho_sm;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double critical_cod(const LureSystem& sys, const Matrix& G, const GraphSpectra& spectra,
                    const SolverOptions& solver, const CodSearchOptions& search) {
  if (!(search.tolerance > 0.0) || !(search.upper_cap >= 1.0)) {
    throw InputError("critical CoD search needs a positive tolerance and a cap of at least 1");
  }
  auto feasible = [&](double gamma) {
    GraphSpectra s = spectra;
    s.gamma_bar = gamma;
    return check_reduced_sync_condition(sys, G, s, solver).feasible;
  };

  if (!feasible(0.0)) {
    throw DeterministicallyInfeasible(
        "deterministically infeasible: the reduced condition fails with noise-free links");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (feasible(hi)) {
    lo = hi;
    if (hi >= search.upper_cap) return std::numeric_limits<double>::infinity();
    hi *= 2.0;
  }
  while (hi - lo > search.tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace lursync
