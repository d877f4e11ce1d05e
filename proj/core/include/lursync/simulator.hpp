#pragma once

// Monte Carlo simulation of coupled Lur'e networks with random link weights:
//
//   x_i+ = A x_i - B phi(C x_i) - sum_j w_ij G (y_i - y_j) + v_i,
//
// where w_ij = mu_ij + xi_ij is redrawn every step.

#include "lursync/graph.hpp"
#include "lursync/linalg.hpp"
#include "lursync/nonlinearity.hpp"
#include "lursync/prl.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lursync {

enum class NoiseModel {
  gaussian,           // xi ~ N(0, sigma^2)
  shifted_bernoulli,  // mu + xi in {0, mu/p}, p = mu^2 / (mu^2 + sigma^2)
};

std::string_view to_string(NoiseModel m);
NoiseModel noise_model_from_string(std::string_view s);

/// Torus whose links all share one noise sample per step.
struct TorusNetwork {
  TorusSpec spec;
  double mu = 1.0;
  double sigma_sq = 0.0;
};

using Topology = std::variant<UncertainGraph, TorusNetwork>;

struct FitOptions {
  double skip_fraction = 0.1;   // transient dropped from the start of the fit window
  double floor_rel = 1e-20;     // window ends once err falls below floor_rel * err[0]
  double beta_margin = 1e-3;    // sync needs beta_hat < 1 - beta_margin
  double min_r_squared = 0.9;
  double growth_factor = 10.0;  // desync when the end block mean reaches this multiple of the start block
  double block_fraction = 0.1;  // size of the start/end blocks and of the additive-noise floor estimate

  friend bool operator==(const FitOptions&, const FitOptions&) = default;
};

struct NetworkSimConfig {
  Topology topology = TorusNetwork{};
  LureSystem system;
  Nonlinearity phi;
  Matrix G;
  NoiseModel noise_model = NoiseModel::gaussian;
  double additive_noise = 0.0;  // R_v, v ~ N(0, R_v I)
  int horizon = 1000;
  int trials = 100;
  std::uint64_t seed = 0;
  double x0_center = 0.0;  // every initial state component is center + spread * N(0, 1)
  double x0_spread = 1.0;
  int threads = 1;
  FitOptions fit;
  std::size_t max_nodes = 4096;

  void validate() const;
};

enum class Verdict { sync, desync, inconclusive };

std::string_view to_string(Verdict v);

struct SyncTrace {
  std::vector<double> err;  // err[t] for t = 0..horizon, averaged over non-diverged trials
  double K_hat = 0.0;
  double beta_hat = 0.0;
  double r_squared = 0.0;
  Verdict verdict = Verdict::inconclusive;
  int trials = 0;
  int diverged_count = 0;
  std::string diagnostic;
};

/// Precomputed link list for repeated stepping.
class NetworkStepper {
 public:
  explicit NetworkStepper(const NetworkSimConfig& cfg);

  int n_nodes() const { return n_nodes_; }
  Eigen::Index state_dim() const { return n_; }

  /// Advances the stacked state in place.
  void step(Vector& x, std::mt19937_64& rng) const;

  /// One draw of xi for a link with mean mu and variance sigma_sq.
  double sample_xi(double mu, double sigma_sq, std::mt19937_64& rng) const;

 private:
  struct Link {
    int i;
    int j;
    double mu;
    double sigma_sq;
  };
  Matrix a_;
  Matrix b_;
  Matrix c_;
  Matrix g_;
  Nonlinearity phi_;
  NoiseModel noise_model_;
  double additive_sd_ = 0.0;
  int n_nodes_ = 0;
  Eigen::Index n_ = 0;
  std::vector<Link> links_;
  bool shared_noise_ = false;
  double shared_mu_ = 0.0;
  double shared_sigma_sq_ = 0.0;
};

/// Stacked state after one step. Builds a stepper per call.
Vector step_network(const Vector& state, const NetworkSimConfig& cfg, std::mt19937_64& rng);

/// sum_i ||x_i - xbar||^2, which equals (1/(2N)) sum_i sum_j ||x_i - x_j||^2.
double sync_error(const Vector& state, int n_nodes, Eigen::Index n);

/// Least-squares decay fit and verdict for an averaged error trace.
void fit_trace(SyncTrace& trace, const FitOptions& fit, bool subtract_floor);

SyncTrace simulate(const NetworkSimConfig& cfg);

/// Zero-order-hold discretization of the Chua oscillator with sample time T.
/// A nonzero loop_shift k returns A - k B C, to be simulated with
/// Nonlinearity::chua(p).with_loop_shift(k). Throws InputError when the
/// (shifted) nonlinearity violates the sector bounds given by D (pointwise)
/// or D1 (incremental) on a grid over [-10, 10].
LureSystem build_chua_network_system(const ChuaParams& p, double sample_time, const Matrix& D,
                                     const Matrix& D1, double loop_shift = 0.0);

/// Continuous-time Chua matrices (A, B, C).
struct ChuaContinuous {
  Matrix A;
  Matrix B;
  Matrix C;
};
ChuaContinuous chua_continuous();

/// `t,err` rows followed by `# key,value` summary lines.
void write_trace_csv(std::ostream& os, const SyncTrace& trace);

}  // namespace lursync
