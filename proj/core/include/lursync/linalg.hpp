#pragma once

// Dense linear algebra primitives for desk-scale systems (orders up to a few
// hundred). Storage and products come from Eigen; the symmetric eigensolver
// is a cyclic Jacobi iteration so that every spectral quantity in the library
// goes through one well-understood routine.

#include <Eigen/Dense>

#include <cstddef>

namespace lursync {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square matrix with entries[i][j] == entries[j][i] exactly.
/// Construction symmetrizes its argument as (M + M^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Eigen::Index order);
  static SymMatrix zero(Eigen::Index order);
  static SymMatrix diagonal(const Vector& d);

  Eigen::Index order() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
  friend SymMatrix operator*(double s, const SymMatrix& a);

 private:
  Matrix m_;
};

struct EigDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, eigenvectors.col(i) <-> eigenvalues(i)
};

struct JacobiOptions {
  int max_sweeps = 100;
  // Off-diagonal Frobenius norm threshold, relative to the Frobenius norm of
  // the input (absolute when the input is zero).
  double tolerance = 1e-12;
};

/// Cyclic Jacobi eigendecomposition. Throws ConvergenceError naming the order
/// and remaining off-diagonal residual when the sweep cap is hit.
EigDecomposition sym_eig(const SymMatrix& m, const JacobiOptions& opts = {});
Vector sym_eigenvalues(const SymMatrix& m, const JacobiOptions& opts = {});

double min_eigenvalue(const SymMatrix& m);
double max_eigenvalue(const SymMatrix& m);

/// True iff the smallest eigenvalue exceeds `margin`.
bool is_positive_definite(const SymMatrix& m, double margin = 0.0);

Matrix kron(const Matrix& a, const Matrix& b);

/// S with S * S = m^{-1}, S symmetric positive definite.
SymMatrix sym_inv_sqrt(const SymMatrix& m);

/// Largest singular value, computed from the eigenvalues of m^T m.
double spectral_norm(const Matrix& m);

/// Matrix exponential by scaling-and-squaring with a truncated Taylor series.
Matrix expm(const Matrix& a);

struct DiscreteSystem {
  Matrix a;
  Matrix b;
};

/// Zero-order-hold discretization: a_disc = exp(a T), b_disc = int_0^T exp(a s) ds b.
DiscreteSystem zoh_discretize(const Matrix& a_cont, const Matrix& b_cont, double sample_time);

/// Relative Frobenius distance ||a - b|| / max(1, ||b||).
double rel_frobenius_error(const Matrix& a, const Matrix& b);

}  // namespace lursync
