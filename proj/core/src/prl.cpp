#include "lursync/prl.hpp"

#include "lursync/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lursync {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

std::string dims(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

bool llt_positive(const Matrix& m, double margin) {
  Matrix shifted = m;
  shifted.diagonal().array() -= margin;
  Eigen::LLT<Matrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

SymMatrix sym_inverse(const SymMatrix& m) {
  Eigen::LLT<Matrix> llt(m.matrix());
  if (llt.info() != Eigen::Success) throw InputError("matrix to invert is not positive definite");
  return SymMatrix(llt.solve(Matrix::Identity(m.order(), m.order())));
}

// |X| for symmetric X.
Matrix sym_abs(const SymMatrix& x) {
  const EigDecomposition e = sym_eig(x);
  return e.eigenvectors * e.eigenvalues.cwiseAbs().asDiagonal() * e.eigenvectors.transpose();
}

// Loewner upper bound of X and Y: (X + Y)/2 + |X - Y|/2.
SymMatrix upper_bound(const SymMatrix& x, const SymMatrix& y) {
  const SymMatrix diff = x - y;
  return SymMatrix(0.5 * (x.matrix() + y.matrix()) + 0.5 * sym_abs(diff));
}

double slack_of(const RiccatiProblem& problem, const SymMatrix& p) {
  const auto rhs = riccati_rhs(problem, p);
  if (!rhs) return -std::numeric_limits<double>::infinity();
  return min_eigenvalue(p - (*rhs - problem.r));
}

bool verify(const RiccatiProblem& problem, const SymMatrix& p, const SolverOptions& opts,
            double& slack) {
  slack = slack_of(problem, p);
  if (!std::isfinite(slack) || slack <= opts.pd_margin) return false;
  if (!is_positive_definite(p, opts.pd_margin)) return false;
  const SymMatrix s(problem.sigma.matrix() - problem.b.transpose() * p.matrix() * problem.b);
  return is_positive_definite(s, opts.pd_margin);
}

void validate_options(const SolverOptions& o) {
  require(o.max_iterations >= 1, "solver max_iterations must be at least 1");
  require(o.damping > 0.0 && o.damping <= 1.0, "solver damping must lie in (0, 1]");
  require(o.residual_tol > 0.0, "solver residual_tol must be positive");
  require(o.divergence_bound > 0.0, "solver divergence_bound must be positive");
  require(o.pd_margin >= 0.0, "solver pd_margin must be nonnegative");
  require(o.r_scale > 0.0, "solver r_scale must be positive");
  require(o.max_backtracks >= 0, "solver max_backtracks must be nonnegative");
}

// Shared damped iteration. `step` returns the target of the update (the
// right-hand side, or an upper bound over several right-hand sides), or
// nullopt when P left the domain of some instance.
template <typename Step, typename Finish>
FeasibilityCertificate iterate(const SymMatrix& start, const SolverOptions& opts,
                               const std::vector<Matrix>& bs, const std::vector<SymMatrix>& sigmas,
                               Step&& step, Finish&& finish) {
  FeasibilityCertificate cert;
  SymMatrix p = start;

  auto in_domain = [&](const SymMatrix& cand) {
    for (std::size_t i = 0; i < bs.size(); ++i) {
      const Matrix s = sigmas[i].matrix() - bs[i].transpose() * cand.matrix() * bs[i];
      if (!llt_positive(s, 0.0)) return false;
    }
    return true;
  };

  for (int it = 1; it <= opts.max_iterations; ++it) {
    cert.iterations = it;
    const std::optional<SymMatrix> target = step(p);
    if (!target) {
      cert.binding_condition = Binding::sigma_margin;
      return cert;
    }
    const double pnorm = p.matrix().norm();
    cert.residual = (target->matrix() - p.matrix()).norm();
    if (!std::isfinite(cert.residual) || target->matrix().norm() > opts.divergence_bound) {
      cert.binding_condition = Binding::divergence;
      return cert;
    }
    if (cert.residual <= opts.residual_tol * (1.0 + pnorm) && finish(p, cert)) return cert;

    double eta = opts.damping;
    SymMatrix next = (1.0 - eta) * p + eta * *target;
    int backtracks = 0;
    while (!in_domain(next)) {
      if (backtracks == opts.max_backtracks) {
        cert.binding_condition = Binding::sigma_margin;
        return cert;
      }
      ++backtracks;
      eta *= 0.5;
      next = (1.0 - eta) * p + eta * *target;
    }
    p = next;
  }
  cert.binding_condition = Binding::iteration_cap;
  return cert;
}

SymMatrix default_r(Eigen::Index n, const SolverOptions& opts) {
  return opts.r_scale * SymMatrix::identity(n);
}

}  // namespace

std::string_view to_string(Binding b) {
  switch (b) {
    case Binding::none: return "none";
    case Binding::sigma_margin: return "sigma_margin";
    case Binding::divergence: return "divergence";
    case Binding::iteration_cap: return "iteration_cap";
    case Binding::certificate_check: return "certificate_check";
    case Binding::no_common_certificate: return "no_common_certificate";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

void LureSystem::validate() const {
  const Eigen::Index n = A.rows();
  require(n >= 1 && A.cols() == n, "system: A must be square and nonempty, got " + dims(A));
  const Eigen::Index m = B.cols();
  require(m >= 1 && B.rows() == n, "system: B must be " + std::to_string(n) + "xm, got " + dims(B));
  require(C.rows() == m && C.cols() == n,
          "system: C must be " + std::to_string(m) + "x" + std::to_string(n) + ", got " + dims(C));
  require(D.rows() == m && D.cols() == m, "system: D must be " + std::to_string(m) + "x" +
                                              std::to_string(m) + ", got " + dims(D));
  require(D1.rows() == m && D1.cols() == m, "system: D1 must be " + std::to_string(m) + "x" +
                                                std::to_string(m) + ", got " + dims(D1));
  require(A.allFinite() && B.allFinite() && C.allFinite() && D.allFinite() && D1.allFinite(),
          "system: matrices must be finite");
  require(llt_positive(sigma().matrix(), 0.0) && is_positive_definite(sigma()),
          "system: D + D' must be positive definite");
  require(llt_positive(sigma1().matrix(), 0.0) && is_positive_definite(sigma1()),
          "system: D1 + D1' must be positive definite");
}

SymMatrix LureSystem::sigma() const { return SymMatrix(D + D.transpose()); }
SymMatrix LureSystem::sigma1() const { return SymMatrix(D1 + D1.transpose()); }

Matrix LureSystem::a0() const {
  return A - B * sigma().matrix().llt().solve(C);
}

Matrix LureSystem::a0_incremental() const {
  return A - B * sigma1().matrix().llt().solve(C);
}

void StructuredUncertainty::validate(Eigen::Index state_dim) const {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    require(t.A.rows() == state_dim && t.A.cols() == state_dim,
            "uncertainty term " + std::to_string(i) + " must be " + std::to_string(state_dim) +
                "x" + std::to_string(state_dim) + ", got " + dims(t.A));
    require(std::isfinite(t.sigma_sq) && t.sigma_sq >= 0.0,
            "uncertainty term " + std::to_string(i) + " has negative or non-finite variance");
  }
}

void RiccatiProblem::validate() const {
  const Eigen::Index n = a.rows();
  require(n >= 1 && a.cols() == n, "riccati: mean matrix must be square, got " + dims(a));
  require(b.rows() == n, "riccati: input matrix has " + std::to_string(b.rows()) + " rows, expected " +
                             std::to_string(n));
  require(sigma.order() == b.cols(), "riccati: sector matrix order does not match input width");
  require(q.order() == n && r.order() == n, "riccati: constant terms must match the state order");
  require(is_positive_definite(sigma), "riccati: sector matrix must be positive definite");
  require(is_positive_definite(r), "riccati: R must be positive definite");
  for (const auto& t : noise) {
    require(t.a.rows() == n && t.a.cols() == n, "riccati: noise direction must be square of the state order");
    require(std::isfinite(t.weight) && t.weight >= 0.0, "riccati: noise weight must be nonnegative");
  }
}

std::optional<SymMatrix> riccati_rhs(const RiccatiProblem& problem, const SymMatrix& p) {
  const Matrix& pm = p.matrix();
  const Matrix pb = pm * problem.b;
  const Matrix s = problem.sigma.matrix() - problem.b.transpose() * pb;
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Matrix k = pm + pb * llt.solve(pb.transpose());
  Matrix rhs = problem.a.transpose() * k * problem.a;
  for (const auto& t : problem.noise) {
    if (t.weight == 0.0) continue;
    rhs.noalias() += t.weight * (t.a.transpose() * k * t.a);
  }
  rhs += problem.q.matrix() + problem.r.matrix();
  return SymMatrix(rhs);
}

FeasibilityCertificate solve_riccati(const RiccatiProblem& problem, const SolverOptions& opts) {
  problem.validate();
  validate_options(opts);
  auto step = [&](const SymMatrix& p) { return riccati_rhs(problem, p); };
  auto finish = [&](const SymMatrix& p, FeasibilityCertificate& cert) {
    double slack = 0.0;
    if (!verify(problem, p, opts, slack)) return false;
    cert.feasible = true;
    cert.P = p;
    cert.slack = slack;
    return true;
  };
  return iterate(problem.r, opts, {problem.b}, {problem.sigma}, step, finish);
}

namespace {

constexpr std::size_t kNoFailure = static_cast<std::size_t>(-1);

// Every instance is solved alone first; `failed` names the first one that is
// infeasible on its own. Each individual solution is then tried as the common
// certificate before iterating on the Loewner upper bound.
FeasibilityCertificate common_certificate(std::span<const RiccatiProblem> problems,
                                          const SolverOptions& opts, std::size_t& failed) {
  failed = kNoFailure;
  std::vector<FeasibilityCertificate> alone;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    FeasibilityCertificate c = solve_riccati(problems[i], opts);
    if (!c.feasible) {
      failed = i;
      return c;
    }
    alone.push_back(std::move(c));
  }
  if (problems.size() == 1) return alone.front();

  for (const FeasibilityCertificate& cand : alone) {
    double worst = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (const auto& pr : problems) {
      double slack = 0.0;
      if (!verify(pr, *cand.P, opts, slack)) {
        ok = false;
        break;
      }
      worst = std::min(worst, slack);
    }
    if (ok) {
      FeasibilityCertificate c = cand;
      c.slack = worst;
      return c;
    }
  }

  SymMatrix start = problems.front().r;
  std::vector<Matrix> bs;
  std::vector<SymMatrix> sigmas;
  for (const auto& pr : problems) {
    start = upper_bound(start, pr.r);
    bs.push_back(pr.b);
    sigmas.push_back(pr.sigma);
  }

  auto step = [&](const SymMatrix& p) -> std::optional<SymMatrix> {
    std::optional<SymMatrix> bound;
    for (const auto& pr : problems) {
      auto rhs = riccati_rhs(pr, p);
      if (!rhs) return std::nullopt;
      bound = bound ? upper_bound(*bound, *rhs) : *rhs;
    }
    return bound;
  };
  auto finish = [&](const SymMatrix& p, FeasibilityCertificate& cert) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& pr : problems) {
      double slack = 0.0;
      if (!verify(pr, p, opts, slack)) return false;
      worst = std::min(worst, slack);
    }
    cert.feasible = true;
    cert.P = p;
    cert.slack = worst;
    return true;
  };
  FeasibilityCertificate c = iterate(start, opts, bs, sigmas, step, finish);
  if (!c.feasible) c.binding_condition = Binding::no_common_certificate;
  return c;
}

}  // namespace

FeasibilityCertificate solve_riccati_common(std::span<const RiccatiProblem> problems,
                                            const SolverOptions& opts) {
  require(!problems.empty(), "riccati: at least one instance is required");
  validate_options(opts);
  for (const auto& pr : problems) pr.validate();
  const Eigen::Index n = problems.front().a.rows();
  for (const auto& pr : problems) require(pr.a.rows() == n, "riccati: instances differ in state order");
  std::size_t failed = kNoFailure;
  return common_certificate(problems, opts, failed);
}

// ---------------------------------------------------------------------------

namespace {

RiccatiProblem prl_problem(const LureSystem& sys, const StructuredUncertainty& unc,
                           const std::optional<SymMatrix>& r, const SolverOptions& opts, bool dual) {
  sys.validate();
  unc.validate(sys.state_dim());
  const SymMatrix sigma = sys.sigma();
  const Matrix a0 = sys.a0();
  const Matrix sigma_inv = sym_inverse(sigma).matrix();

  RiccatiProblem pr;
  pr.sigma = sigma;
  if (!dual) {
    pr.a = a0;
    pr.b = sys.B;
    pr.q = SymMatrix(sys.C.transpose() * sigma_inv * sys.C);
  } else {
    pr.a = a0.transpose();
    pr.b = sys.C.transpose();
    pr.q = SymMatrix(sys.B * sigma_inv * sys.B.transpose());
  }
  for (const auto& t : unc.terms) {
    pr.noise.push_back({dual ? Matrix(t.A.transpose()) : t.A, t.sigma_sq});
  }
  pr.r = r ? *r : default_r(sys.state_dim(), opts);
  return pr;
}

}  // namespace

FeasibilityCertificate solve_stochastic_prl(const LureSystem& sys, const StructuredUncertainty& unc,
                                            const std::optional<SymMatrix>& r_p,
                                            const SolverOptions& opts) {
  return solve_riccati(prl_problem(sys, unc, r_p, opts, false), opts);
}

FeasibilityCertificate solve_dual_prl(const LureSystem& sys, const StructuredUncertainty& unc,
                                      const std::optional<SymMatrix>& r_q,
                                      const SolverOptions& opts) {
  return solve_riccati(prl_problem(sys, unc, r_q, opts, true), opts);
}

// ---------------------------------------------------------------------------

namespace {

Matrix coupling_product(const LureSystem& sys, const Matrix& G) {
  require(G.rows() == sys.state_dim() && G.cols() == sys.C.rows(),
          "coupling G must be " + std::to_string(sys.state_dim()) + "x" +
              std::to_string(sys.C.rows()) + ", got " + dims(G));
  require(G.allFinite(), "coupling G must be finite");
  return G * sys.C;
}

}  // namespace

FullSyncProblem build_full_sync_problem(const UncertainGraph& g, const LureSystem& sys,
                                        const Matrix& G, const SolverOptions& opts) {
  sys.validate();
  validate_options(opts);
  const Matrix gc = coupling_product(sys, G);
  const int n_nodes = g.n_nodes();
  require(n_nodes >= 2, "synchronization needs at least two nodes");
  spectra(g);  // connectivity check

  const Eigen::Index n = sys.state_dim();
  const Eigen::Index order = static_cast<Eigen::Index>(n_nodes - 1) * n;
  if (static_cast<Eigen::Index>(n_nodes) * n > opts.max_state_dim) {
    std::ostringstream os;
    os << "full condition needs " << order << " states (N*n = " << n_nodes * n
       << " exceeds the cap " << opts.max_state_dim << "); use the reduced condition";
    throw InputError(os.str());
  }

  const Matrix u = sync_complement(n_nodes);
  const Matrix eye = Matrix::Identity(n_nodes - 1, n_nodes - 1);
  const SymMatrix sigma1 = sys.sigma1();
  const Matrix sigma1_inv = sym_inverse(sigma1).matrix();

  FullSyncProblem fp;
  fp.lambda_hat = u.transpose() * laplacian(g).matrix() * u;
  fp.c_hat = kron(eye, sys.C);

  RiccatiProblem& pr = fp.riccati;
  pr.a = kron(eye, sys.a0_incremental()) - kron(fp.lambda_hat, gc);
  pr.b = kron(eye, sys.B);
  pr.sigma = SymMatrix(kron(eye, sigma1.matrix()));
  pr.q = SymMatrix(kron(eye, sys.C.transpose() * sigma1_inv * sys.C));
  pr.r = default_r(order, opts);

  for (const auto& e : g.unc_edges()) {
    const Vector l_hat = u.transpose() * edge_vector(e.i, e.j, n_nodes);
    Matrix dir = kron(l_hat * l_hat.transpose(), gc);
    fp.noise_dirs.push_back(dir);
    fp.noise_vars.push_back(e.sigma_sq);
    pr.noise.push_back({std::move(dir), e.sigma_sq});
  }
  return fp;
}

FeasibilityCertificate check_full_sync_condition(const UncertainGraph& g, const LureSystem& sys,
                                                 const Matrix& G, const SolverOptions& opts) {
  return solve_riccati(build_full_sync_problem(g, sys, G, opts).riccati, opts);
}

RiccatiProblem mode_problem(const LureSystem& sys, const Matrix& G, double gain,
                            double noise_intensity, const SolverOptions& opts) {
  sys.validate();
  const Matrix gc = coupling_product(sys, G);
  require(std::isfinite(gain), "mode gain must be finite");
  require(std::isfinite(noise_intensity) && noise_intensity >= 0.0,
          "mode noise intensity must be nonnegative");
  const SymMatrix sigma1 = sys.sigma1();
  RiccatiProblem pr;
  pr.a = sys.a0_incremental() - gain * gc;
  pr.b = sys.B;
  pr.sigma = sigma1;
  pr.q = SymMatrix(sys.C.transpose() * sym_inverse(sigma1).matrix() * sys.C);
  if (noise_intensity > 0.0) pr.noise.push_back({gc, noise_intensity});
  pr.r = default_r(sys.state_dim(), opts);
  return pr;
}

FeasibilityCertificate check_mode_condition(const LureSystem& sys, const Matrix& G, double gain,
                                            double noise_intensity, const SolverOptions& opts) {
  return solve_riccati(mode_problem(sys, G, gain, noise_intensity, opts), opts);
}

FeasibilityCertificate check_reduced_sync_condition(const LureSystem& sys, const Matrix& G,
                                                    const GraphSpectra& s,
                                                    const SolverOptions& opts) {
  require(s.lambda2 > kConnectivityThreshold, "cannot synchronize a disconnected network");
  require(s.lambdaN >= s.lambda2, "spectra: lambdaN must not be below lambda2");
  require(s.gamma_bar >= 0.0 && s.tau >= 0.0 && s.tau <= 1.0 + 1e-12,
          "spectra: gamma_bar must be nonnegative and tau must lie in [0, 1]");

  std::vector<double> endpoints{s.lambda2};
  if (std::abs(s.lambdaN - s.lambda2) > 1e-12 * std::max(1.0, s.lambdaN)) endpoints.push_back(s.lambdaN);

  std::vector<RiccatiProblem> problems;
  for (double lam : endpoints) {
    problems.push_back(mode_problem(sys, G, lam, 2.0 * s.gamma_bar * s.tau * lam, opts));
  }

  std::size_t failed = kNoFailure;
  FeasibilityCertificate common = common_certificate(problems, opts, failed);
  if (failed != kNoFailure) {
    common.binding_eigenvalue = endpoints[failed];
    return common;
  }
  if (!common.feasible) return common;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const double slack = slack_of(problems[i], *common.P);
    if (slack < worst) {
      worst = slack;
      common.binding_eigenvalue = endpoints[i];
    }
  }
  return common;
}

FeasibilityCertificate check_spectral_mode_condition(std::span<const double> eigenvalues,
                                                     const LureSystem& sys, const Matrix& G,
                                                     double mu, double sigma_sq,
                                                     const SolverOptions& opts) {
  require(!eigenvalues.empty(), "mode condition needs at least one eigenvalue");
  require(std::isfinite(mu) && mu > 0.0, "mean weight mu must be positive");
  require(std::isfinite(sigma_sq) && sigma_sq >= 0.0, "variance must be nonnegative");

  FeasibilityCertificate tightest;
  double worst = std::numeric_limits<double>::infinity();
  for (double lam : eigenvalues) {
    require(std::isfinite(lam) && lam > 0.0, "mode condition eigenvalues must be positive");
    FeasibilityCertificate c = check_mode_condition(sys, G, mu * lam, sigma_sq * lam * lam, opts);
    c.binding_eigenvalue = lam;
    if (!c.feasible) return c;
    if (c.slack < worst) {
      worst = c.slack;
      tightest = std::move(c);
    }
  }
  return tightest;
}

FeasibilityCertificate check_torus_matrix_condition(const TorusSpec& spec, const LureSystem& sys,
                                                    const Matrix& G, double mu, double sigma_sq,
                                                    const SolverOptions& opts) {
  spec.validate();
  const std::vector<double> eigs = torus_distinct_nonzero_eigenvalues(spec);
  return check_spectral_mode_condition(eigs, sys, G, mu, sigma_sq, opts);
}

// ---------------------------------------------------------------------------

bool sector_check(const VectorFunction& phi, const Matrix& D, const Matrix& D1,
                  std::span<const Vector> grid) {
  require(!grid.empty(), "sector check needs a nonempty grid");
  const Eigen::Index m = D.rows();
  require(D.cols() == m && D1.rows() == m && D1.cols() == m, "sector matrices must be square and equal in size");

  std::vector<Vector> values;
  values.reserve(grid.size());
  for (const Vector& y : grid) {
    require(y.size() == m, "sector grid point has the wrong dimension");
    Vector f = phi(y);
    require(f.size() == m, "nonlinearity returned a vector of the wrong dimension");
    if (!f.allFinite()) return false;
    if (y.squaredNorm() > 0.0 && !(f.dot(y - D * f) > 0.0)) return false;
    values.push_back(std::move(f));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const Vector dy = grid[i] - grid[j];
      if (dy.squaredNorm() == 0.0) continue;
      const Vector df = values[i] - values[j];
      if (!(df.dot(dy - D1 * df) > 0.0)) return false;
    }
  }
  return true;
}

bool sector_check(const VectorFunction& phi, const Matrix& D, std::span<const Vector> grid) {
  return sector_check(phi, D, D, grid);
}

}  // namespace lursync
