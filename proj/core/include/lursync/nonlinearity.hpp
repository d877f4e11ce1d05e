#pragma once

#include "lursync/linalg.hpp"

namespace lursync {

/// Slopes of the piecewise-linear Chua diode characteristic.
struct ChuaParams {
  double epsilon = 0.3;
  double m0 = -0.1;
  double m1 = 0.2;
  friend bool operator==(const ChuaParams&, const ChuaParams&) = default;
};

/// epsilon*y for |y| <= 1, (epsilon - m0 + m1) y + (m0 - m1) sgn(y) otherwise.
double chua_nonlinearity(double y, const ChuaParams& p);

/// Static memoryless nonlinearity applied componentwise to an output vector.
class Nonlinearity {
 public:
  enum class Kind { zero, linear, cubic, chua };

  Nonlinearity() = default;
  static Nonlinearity zero() { return {}; }
  static Nonlinearity linear(double slope);
  static Nonlinearity cubic(double coefficient);
  static Nonlinearity chua(const ChuaParams& p);

  /// phi(y) - k y. Pairs with a state matrix A - k B C, which leaves the
  /// closed loop unchanged and moves the sector lower bound by k.
  Nonlinearity with_loop_shift(double k) const;

  Kind kind() const { return kind_; }
  double coefficient() const { return coefficient_; }
  double loop_shift() const { return shift_; }
  const ChuaParams& chua_params() const { return chua_; }

  double scalar(double y) const;
  Vector operator()(const Vector& y) const;

  friend bool operator==(const Nonlinearity&, const Nonlinearity&) = default;

 private:
  Kind kind_ = Kind::zero;
  double coefficient_ = 0.0;
  double shift_ = 0.0;
  ChuaParams chua_{};
};

}  // namespace lursync
