#pragma once

#include <stdexcept>
#include <string>

namespace lursync {

/// Structural problem with caller-supplied data: bad dimensions, invalid
/// graphs, non-positive-definite sector matrices.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to converge within its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The synchronization condition fails even with noise-free links, so no
/// positive coefficient of dispersion can be certified.
class DeterministicallyInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lursync
