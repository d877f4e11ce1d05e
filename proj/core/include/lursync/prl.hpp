#pragma once

// Feasibility certificates for the stochastic Positive Real Lemma and for the
// mean-square synchronization conditions built on it.
//
// Every condition reduces to a structured Riccati equation
//
//   P = A' K(P) A + sum_i w_i A_i' K(P) A_i + Q + R,
//   K(P) = P + P B (Sigma - B' P B)^{-1} B' P,      Sigma - B' P B > 0,
//
// which is solved by damped fixed-point iteration from P_0 = R. The right-hand
// side is monotone in P, so the iterates increase towards the minimal
// solution when one exists; divergence or loss of Sigma - B'PB > 0 shows that
// none does.

#include "lursync/graph.hpp"
#include "lursync/linalg.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lursync {

/// x+ = A x - B phi(y), y = C x with phi in the sector defined by D
/// (pointwise) and D1 (incremental).
struct LureSystem {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  Matrix D1;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index io_dim() const { return B.cols(); }

  /// Throws InputError on non-conformable blocks or when D + D' or
  /// D1 + D1' is not positive definite.
  void validate() const;

  SymMatrix sigma() const;   // D + D'
  SymMatrix sigma1() const;  // D1 + D1'
  Matrix a0() const;         // A - B Sigma^{-1} C
  Matrix a0_incremental() const;  // A - B Sigma1^{-1} C
};

/// A(xi) = A + sum_i xi_i A_i with independent zero-mean xi_i of variance sigma_sq.
struct StructuredUncertainty {
  struct Term {
    Matrix A;
    double sigma_sq = 0.0;
  };
  std::vector<Term> terms;

  void validate(Eigen::Index state_dim) const;
};

struct SolverOptions {
  int max_iterations = 10000;
  double damping = 0.5;
  double residual_tol = 1e-9;      // relative to 1 + ||P||_F
  double divergence_bound = 1e12;  // ||P||_F above this means no solution
  double pd_margin = 1e-9;         // strictness margin for every "> 0" check
  double r_scale = 1e-6;           // R = r_scale * I when the caller gives none
  int max_backtracks = 4;          // damping halvings before giving up on Sigma - B'PB > 0
  Eigen::Index max_state_dim = 256;  // cap on N*n for the full network condition

  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

enum class Binding {
  none,
  sigma_margin,           // Sigma - B'PB lost positive definiteness
  divergence,             // ||P|| exceeded the divergence bound
  iteration_cap,          // no convergence within max_iterations
  certificate_check,      // converged P failed the strict re-verification
  no_common_certificate,  // endpoints feasible separately but not with one P
};

std::string_view to_string(Binding b);

struct FeasibilityCertificate {
  bool feasible = false;
  std::optional<SymMatrix> P;
  double residual = 0.0;  // ||RHS(P) - P||_F at the last iterate
  int iterations = 0;
  Binding binding_condition = Binding::none;
  // Eigenvalue whose instance decided the verdict (the failing one when
  // infeasible, the tightest one when feasible). NaN for single instances.
  double binding_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  // Smallest eigenvalue of P - (RHS(P) - R); positive for a valid certificate.
  double slack = 0.0;
};

/// One structured Riccati instance.
struct RiccatiProblem {
  Matrix a;          // mean state matrix
  Matrix b;          // input matrix
  SymMatrix sigma;   // sector matrix, positive definite
  SymMatrix q;       // constant term (C' Sigma^{-1} C or its dual)
  struct Noise {
    Matrix a;
    double weight = 0.0;
  };
  std::vector<Noise> noise;
  SymMatrix r;       // R > 0

  void validate() const;
};

/// RHS(P), or nullopt when Sigma - B'PB is not positive definite.
std::optional<SymMatrix> riccati_rhs(const RiccatiProblem& problem, const SymMatrix& p);

FeasibilityCertificate solve_riccati(const RiccatiProblem& problem, const SolverOptions& opts = {});

/// Search for one P solving every instance as a strict inequality, by
/// iterating on a Loewner upper bound of the individual right-hand sides.
FeasibilityCertificate solve_riccati_common(std::span<const RiccatiProblem> problems,
                                            const SolverOptions& opts = {});

// ---------------------------------------------------------------------------
// Stochastic positive real lemma

/// Primal condition: P = A0'KA0 + sum sigma_i^2 A_i'KA_i + C'Sigma^{-1}C + R_P.
FeasibilityCertificate solve_stochastic_prl(const LureSystem& sys, const StructuredUncertainty& unc,
                                            const std::optional<SymMatrix>& r_p = std::nullopt,
                                            const SolverOptions& opts = {});

/// Dual condition on Q with (A, B, C) replaced by (A', C', B').
FeasibilityCertificate solve_dual_prl(const LureSystem& sys, const StructuredUncertainty& unc,
                                      const std::optional<SymMatrix>& r_q = std::nullopt,
                                      const SolverOptions& opts = {});

// ---------------------------------------------------------------------------
// Network synchronization conditions

/// Data of the full (N-1)n-order condition on the synchronization-error
/// coordinates z = (U' (x) I) x, kept so margins can be built from a solved P.
struct FullSyncProblem {
  RiccatiProblem riccati;            // noise weights are the per-link variances
  Matrix c_hat;                      // I_{N-1} (x) C
  std::vector<Matrix> noise_dirs;    // A_alpha = (U'l)(U'l)' (x) GC per uncertain link
  std::vector<double> noise_vars;    // sigma^2 per uncertain link
  Matrix lambda_hat;                 // U' L U
};

FullSyncProblem build_full_sync_problem(const UncertainGraph& g, const LureSystem& sys,
                                        const Matrix& G, const SolverOptions& opts = {});

FeasibilityCertificate check_full_sync_condition(const UncertainGraph& g, const LureSystem& sys,
                                                 const Matrix& G, const SolverOptions& opts = {});

/// n-order instance at one Laplacian mode: mean matrix A0 - gain*GC and a
/// single noise direction GC with weight noise_intensity.
RiccatiProblem mode_problem(const LureSystem& sys, const Matrix& G, double gain,
                            double noise_intensity, const SolverOptions& opts = {});

FeasibilityCertificate check_mode_condition(const LureSystem& sys, const Matrix& G, double gain,
                                            double noise_intensity, const SolverOptions& opts = {});

/// Reduced, network-size-independent condition at lambda2 and lambdaN with
/// noise intensity 2 * gamma_bar * tau * lambda. Feasible iff a single P
/// certifies both endpoints.
FeasibilityCertificate check_reduced_sync_condition(const LureSystem& sys, const Matrix& G,
                                                    const GraphSpectra& spectra,
                                                    const SolverOptions& opts = {});

/// Per-mode condition for links sharing one noise source: for every listed
/// nonzero eigenvalue lambda, gain mu*lambda and intensity sigma_sq*lambda^2.
FeasibilityCertificate check_spectral_mode_condition(std::span<const double> eigenvalues,
                                                     const LureSystem& sys, const Matrix& G,
                                                     double mu, double sigma_sq,
                                                     const SolverOptions& opts = {});

/// Per-mode condition over the distinct nonzero eigenvalues of a torus.
FeasibilityCertificate check_torus_matrix_condition(const TorusSpec& spec, const LureSystem& sys,
                                                    const Matrix& G, double mu, double sigma_sq,
                                                    const SolverOptions& opts = {});

// ---------------------------------------------------------------------------

using VectorFunction = std::function<Vector(const Vector&)>;

/// Checks phi'(y - D phi) > 0 at every nonzero grid point and
/// dphi'(dy - D1 dphi) > 0 for every pair of distinct grid points.
bool sector_check(const VectorFunction& phi, const Matrix& D, const Matrix& D1,
                  std::span<const Vector> grid);

/// Same as above with D1 = D.
bool sector_check(const VectorFunction& phi, const Matrix& D, std::span<const Vector> grid);

}  // namespace lursync
