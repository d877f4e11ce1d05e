#include "lursync/linalg.hpp"

#include "lursync/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace lursync {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "SymMatrix: matrix is " << m.rows() << "x" << m.cols() << ", expected square";
    throw InputError(os.str());
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index order) {
  return SymMatrix(Matrix::Identity(order, order));
}

SymMatrix SymMatrix::zero(Eigen::Index order) {
  return SymMatrix(Matrix::Zero(order, order));
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  return SymMatrix(Matrix(d.asDiagonal()));
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  SymMatrix r;
  r.m_ = a.m_ + b.m_;
  return r;
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  SymMatrix r;
  r.m_ = a.m_ - b.m_;
  return r;
}

SymMatrix operator*(double s, const SymMatrix& a) {
  SymMatrix r;
  r.m_ = s * a.m_;
  return r;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

}  // namespace

EigDecomposition sym_eig(const SymMatrix& m, const JacobiOptions& opts) {
  const Eigen::Index n = m.order();
  Matrix a = m.matrix();
  Matrix v = Matrix::Identity(n, n);

  const double scale = a.norm();
  const double threshold = scale > 0.0 ? opts.tolerance * scale : opts.tolerance;

  double off = off_diagonal_norm(a);
  int sweep = 0;
  while (off > threshold) {
    if (sweep == opts.max_sweeps) {
      std::ostringstream os;
      os << "sym_eig: Jacobi iteration did not converge for a matrix of order " << n
         << " after " << opts.max_sweeps << " sweeps (off-diagonal residual " << off << ")";
      throw ConvergenceError(os.str());
    }
    ++sweep;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          const double new_rp = arp - s * (arq + tau * arp);
          const double new_rq = arq + s * (arp - tau * arq);
          a(r, p) = a(p, r) = new_rp;
          a(r, q) = a(q, r) = new_rq;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
    off = off_diagonal_norm(a);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  EigDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    out.eigenvectors.col(k) = v.col(src);
  }
  return out;
}

Vector sym_eigenvalues(const SymMatrix& m, const JacobiOptions& opts) {
  return sym_eig(m, opts).eigenvalues;
}

double min_eigenvalue(const SymMatrix& m) {
  if (m.order() == 0) return std::numeric_limits<double>::infinity();
  return sym_eigenvalues(m)(0);
}

double max_eigenvalue(const SymMatrix& m) {
  if (m.order() == 0) return -std::numeric_limits<double>::infinity();
  const Vector ev = sym_eigenvalues(m);
  return ev(ev.size() - 1);
}

bool is_positive_definite(const SymMatrix& m, double margin) {
  return min_eigenvalue(m) > margin;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

SymMatrix sym_inv_sqrt(const SymMatrix& m) {
  const EigDecomposition e = sym_eig(m);
  if (m.order() == 0) return m;
  const double smallest = e.eigenvalues(0);
  if (!(smallest > 0.0)) {
    std::ostringstream os;
    os << "sym_inv_sqrt: matrix of order " << m.order()
       << " is not positive definite (smallest eigenvalue " << smallest << ")";
    throw InputError(os.str());
  }
  const Vector d = e.eigenvalues.array().rsqrt();
  return SymMatrix(e.eigenvectors * d.asDiagonal() * e.eigenvectors.transpose());
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.rows() < m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
  const double top = max_eigenvalue(SymMatrix(gram));
  return std::sqrt(std::max(0.0, top));
}

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw InputError("expm: matrix must be square");
  const Eigen::Index n = a.rows();
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();

  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Matrix scaled = a / std::ldexp(1.0, squarings);

  // ||scaled||_1 <= 1/2, so the k-th Taylor term is below 2^-k / k!.
  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
    if (term.norm() <= 1e-18 * result.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

DiscreteSystem zoh_discretize(const Matrix& a_cont, const Matrix& b_cont, double sample_time) {
  if (!(sample_time > 0.0)) throw InputError("zoh_discretize: sample time must be positive");
  if (a_cont.rows() != a_cont.cols() || b_cont.rows() != a_cont.rows()) {
    throw InputError("zoh_discretize: non-conformable state and input matrices");
  }
  const Eigen::Index n = a_cont.rows();
  const Eigen::Index m = b_cont.cols();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a_cont * sample_time;
  aug.topRightCorner(n, m) = b_cont * sample_time;
  const Matrix e = expm(aug);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

double rel_frobenius_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace lursync
