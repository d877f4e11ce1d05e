#include "lursync/nonlinearity.hpp"

#include <cmath>

namespace lursync {

double chua_nonlinearity(double y, const ChuaParams& p) {
  if (std::abs(y) <= 1.0) return p.epsilon * y;
  const double sgn = y > 0.0 ? 1.0 : -1.0;
  return (p.epsilon - p.m0 + p.m1) * y + (p.m0 - p.m1) * sgn;
}

Nonlinearity Nonlinearity::linear(double slope) {
  Nonlinearity n;
  n.kind_ = Kind::linear;
  n.coefficient_ = slope;
  return n;
}

Nonlinearity Nonlinearity::cubic(double coefficient) {
  Nonlinearity n;
  n.kind_ = Kind::cubic;
  n.coefficient_ = coefficient;
  return n;
}

Nonlinearity Nonlinearity::chua(const ChuaParams& p) {
  Nonlinearity n;
  n.kind_ = Kind::chua;
  n.chua_ = p;
  return n;
}

Nonlinearity Nonlinearity::with_loop_shift(double k) const {
  Nonlinearity n = *this;
  n.shift_ = k;
  return n;
}

double Nonlinearity::scalar(double y) const {
  double base = 0.0;
  switch (kind_) {
    case Kind::zero:
      break;
    case Kind::linear:
      base = coefficient_ * y;
      break;
    case Kind::cubic:
      base = coefficient_ * y * y * y;
      break;
    case Kind::chua:
      base = chua_nonlinearity(y, chua_);
      break;
  }
  return base - shift_ * y;
}

Vector Nonlinearity::operator()(const Vector& y) const {
  Vector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = scalar(y(i));
  return out;
}

}  // namespace lursync
