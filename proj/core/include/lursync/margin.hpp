#pragma once

// Quantitative synchronization margins.

#include "lursync/graph.hpp"
#include "lursync/linalg.hpp"
#include "lursync/prl.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace lursync {

// ---------------------------------------------------------------------------
// Small gain

struct SmallGainCertificate {
  double rho = 0.0;                // largest singular value of the stacked gain M
  double sigma_critical_sq = 0.0;  // 1 / rho^2, +inf when rho == 0
  bool holds = false;              // sigma_sq * rho^2 < 1
};

/// Gain of the loop closed by identical-variance link noise, from a solved
/// full-condition certificate P. `problem` supplies the closed-loop mean, B,
/// Sigma1 and C' Sigma1^{-1} C; `noise_dirs` the per-link directions.
/// Throws InputError naming the block when S or T - A' S^{-1} A is not
/// positive definite.
SmallGainCertificate small_gain_margin(const RiccatiProblem& problem,
                                       std::span<const Matrix> noise_dirs, const SymMatrix& P,
                                       double sigma_sq);

SmallGainCertificate small_gain_margin(const FullSyncProblem& problem, const SymMatrix& P,
                                       double sigma_sq);

// ---------------------------------------------------------------------------
// Scalar agents on a torus: A = a, B = C = 1, D = delta / 2.

struct ScalarTorusParams {
  double a = 1.05;
  double delta = 8.0;
  double g = 0.01;
  double mu = 1.0;
  double sigma_sq = 0.01;

  void validate() const;  // delta > 1, mu > 0, sigma_sq >= 0, all finite
  double a0() const { return a - 1.0 / delta; }
  double bound() const { return (1.0 - 1.0 / delta) * (1.0 - 1.0 / delta); }
};

/// (a0 - mu lambda g)^2 + sigma^2 lambda^2 g^2.
double alpha_sq(const ScalarTorusParams& p, double lambda);

struct TorusMargin {
  double lambda2 = 0.0;
  double lambdaN = 0.0;
  double lambda_sup = 0.0;  // endpoint with the larger alpha^2, ties go to lambda2
  double alpha_sq_2 = 0.0;
  double alpha_sq_N = 0.0;
  bool deterministic_feasible = false;
  // Defined only when deterministic_feasible; NaN otherwise.
  double rho_sm = std::numeric_limits<double>::quiet_NaN();
};

bool scalar_torus_feasible(const ScalarTorusParams& p, const TorusSpec& spec);

TorusMargin scalar_torus_margin(const ScalarTorusParams& p, const TorusSpec& spec);

struct SweepCell {
  int d = 1;
  int k = 1;
  TorusMargin margin;
  bool feasible = false;  // closed-form test at both endpoints
};

/// Every (d, k) cell in row-major order (d outer, k inner), ranges inclusive.
std::vector<SweepCell> torus_sweep(const ScalarTorusParams& p, int N, int k_min, int k_max,
                                   int d_min, int d_max);

/// Header `d,k,rho_sm,feasible`; rho_sm with 12 significant digits, `nan`
/// when undefined; feasible as 0/1.
void write_sweep_csv(std::ostream& os, std::span<const SweepCell> cells);

struct SweepOptimum {
  int d = 1;
  std::optional<int> k;  // empty when no cell of this dimension has a defined margin
  double rho_sm = std::numeric_limits<double>::quiet_NaN();
};

/// Per dimension, the k maximizing rho_sm among cells with a defined margin.
/// Ties go to the smaller k.
std::vector<SweepOptimum> sweep_optima(std::span<const SweepCell> cells);

// ---------------------------------------------------------------------------
// Critical coefficient of dispersion

struct CodSearchOptions {
  double tolerance = 1e-3;       // absolute, on gamma_bar
  double upper_cap = 1048576.0;  // 2^20

  friend bool operator==(const CodSearchOptions&, const CodSearchOptions&) = default;
};

/// Largest gamma_bar for which the reduced condition is certified, found by
/// doubling from 1 and then bisecting; returns the feasible end of the final
/// bracket. Returns +infinity when still feasible at the cap. Throws
/// DeterministicallyInfeasible when the condition fails at gamma_bar = 0.
double critical_cod(const LureSystem& sys, const Matrix& G, const GraphSpectra& spectra,
                    const SolverOptions& solver = {}, const CodSearchOptions& search = {});

}  // namespace lursync
