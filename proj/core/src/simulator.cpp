#include "lursync/simulator.hpp"

#include "lursync/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace lursync {

std::string_view to_string(NoiseModel m) {
  switch (m) {
    case NoiseModel::gaussian: return "gaussian";
    case NoiseModel::shifted_bernoulli: return "shifted-bernoulli";
  }
  return "unknown";
}

NoiseModel noise_model_from_string(std::string_view s) {
  if (s == "gaussian") return NoiseModel::gaussian;
  if (s == "shifted-bernoulli") return NoiseModel::shifted_bernoulli;
  throw InputError("unknown noise model '" + std::string(s) +
                   "' (expected gaussian or shifted-bernoulli)");
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::sync: return "sync";
    case Verdict::desync: return "desync";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

namespace {

int topology_nodes(const Topology& t, std::size_t max_nodes) {
  if (const auto* g = std::get_if<UncertainGraph>(&t)) return g->n_nodes();
  const auto& tn = std::get<TorusNetwork>(t);
  tn.spec.validate();
  const std::size_t count = tn.spec.node_count();
  if (count > max_nodes) {
    throw InputError("torus with " + std::to_string(count) + " nodes exceeds the simulation cap of " +
                     std::to_string(max_nodes));
  }
  return static_cast<int>(count);
}

}  // namespace

void NetworkSimConfig::validate() const {
  system.validate();
  const Eigen::Index n = system.state_dim();
  const Eigen::Index m = system.io_dim();
  if (G.rows() != n || G.cols() != m) {
    throw InputError("coupling G must be " + std::to_string(n) + "x" + std::to_string(m));
  }
  if (horizon < 1) throw InputError("simulation horizon must be at least 1");
  if (trials < 1) throw InputError("simulation needs at least one trial");
  if (threads < 1) throw InputError("simulation needs at least one thread");
  if (!(std::isfinite(additive_noise) && additive_noise >= 0.0)) {
    throw InputError("additive noise covariance scale must be nonnegative");
  }
  if (!(std::isfinite(x0_center) && std::isfinite(x0_spread) && x0_spread >= 0.0)) {
    throw InputError("initial state center must be finite and spread nonnegative");
  }
  if (const auto* tn = std::get_if<TorusNetwork>(&topology)) {
    if (!(tn->mu > 0.0) || !(tn->sigma_sq >= 0.0)) {
      throw InputError("torus link mean must be positive and variance nonnegative");
    }
  }
  if (!(fit.skip_fraction >= 0.0 && fit.skip_fraction < 1.0) ||
      !(fit.block_fraction > 0.0 && fit.block_fraction <= 0.5) || !(fit.growth_factor > 1.0) ||
      !(fit.floor_rel >= 0.0) || !(fit.beta_margin >= 0.0)) {
    throw InputError("fit options out of range");
  }
  topology_nodes(topology, max_nodes);
}

NetworkStepper::NetworkStepper(const NetworkSimConfig& cfg)
    : a_(cfg.system.A),
      b_(cfg.system.B),
      c_(cfg.system.C),
      g_(cfg.G),
      phi_(cfg.phi),
      noise_model_(cfg.noise_model),
      additive_sd_(std::sqrt(cfg.additive_noise)),
      n_nodes_(topology_nodes(cfg.topology, cfg.max_nodes)),
      n_(cfg.system.state_dim()) {
  if (const auto* g = std::get_if<UncertainGraph>(&cfg.topology)) {
    for (const auto& e : g->det_edges()) links_.push_back({e.i, e.j, e.mu, 0.0});
    for (const auto& e : g->unc_edges()) links_.push_back({e.i, e.j, e.mu, e.sigma_sq});
  } else {
    const auto& tn = std::get<TorusNetwork>(cfg.topology);
    const UncertainGraph tg = torus_graph(tn.spec, tn.mu, tn.sigma_sq, cfg.max_nodes);
    for (const auto& e : tg.unc_edges()) links_.push_back({e.i, e.j, e.mu, 0.0});
    shared_noise_ = true;
    shared_mu_ = tn.mu;
    shared_sigma_sq_ = tn.sigma_sq;
  }
}

double NetworkStepper::sample_xi(double mu, double sigma_sq, std::mt19937_64& rng) const {
  if (sigma_sq == 0.0) return 0.0;
  if (noise_model_ == NoiseModel::gaussian) {
    std::normal_distribution<double> dist(0.0, std::sqrt(sigma_sq));
    return dist(rng);
  }
  const double p = mu * mu / (mu * mu + sigma_sq);
  std::bernoulli_distribution keep(p);
  return (keep(rng) ? mu / p : 0.0) - mu;
}

void NetworkStepper::step(Vector& x, std::mt19937_64& rng) const {
  const Eigen::Index n = n_;
  const Eigen::Index m = c_.rows();
  Matrix xs = Eigen::Map<const Matrix>(x.data(), n, n_nodes_);
  const Matrix ys = c_ * xs;

  Matrix next = a_ * xs;
  for (int i = 0; i < n_nodes_; ++i) {
    next.col(i).noalias() -= b_ * phi_(ys.col(i));
  }

  // Coupling accumulated in output space, mapped through G once per node.
  Matrix u = Matrix::Zero(m, n_nodes_);
  const double shared_xi = shared_noise_ ? sample_xi(shared_mu_, shared_sigma_sq_, rng) : 0.0;
  for (const Link& l : links_) {
    const double w = l.mu + (shared_noise_ ? shared_xi : sample_xi(l.mu, l.sigma_sq, rng));
    const Vector diff = w * (ys.col(l.i) - ys.col(l.j));
    u.col(l.i) -= diff;
    u.col(l.j) += diff;
  }
  next.noalias() += g_ * u;

  if (additive_sd_ > 0.0) {
    std::normal_distribution<double> v(0.0, additive_sd_);
    for (Eigen::Index k = 0; k < next.size(); ++k) next.data()[k] += v(rng);
  }
  x = Eigen::Map<const Vector>(next.data(), next.size());
}

Vector step_network(const Vector& state, const NetworkSimConfig& cfg, std::mt19937_64& rng) {
  const NetworkStepper stepper(cfg);
  if (state.size() != static_cast<Eigen::Index>(stepper.n_nodes()) * stepper.state_dim()) {
    throw InputError("state length does not match N*n");
  }
  Vector x = state;
  stepper.step(x, rng);
  return x;
}

double sync_error(const Vector& state, int n_nodes, Eigen::Index n) {
  if (n_nodes < 1 || n < 1 || state.size() != static_cast<Eigen::Index>(n_nodes) * n) {
    throw InputError("state length does not match N*n");
  }
  const Eigen::Map<const Matrix> xs(state.data(), n, n_nodes);
  const Vector mean = xs.rowwise().mean();
  return (xs.colwise() - mean).squaredNorm();
}

// ---------------------------------------------------------------------------

void fit_trace(SyncTrace& trace, const FitOptions& fit, bool subtract_floor) {
  const std::vector<double>& err = trace.err;
  const std::size_t len = err.size();
  trace.K_hat = 0.0;
  trace.beta_hat = 0.0;
  trace.r_squared = 0.0;

  if (len == 0) {
    trace.verdict = Verdict::inconclusive;
    return;
  }
  if (std::all_of(err.begin(), err.end(), [](double e) { return e == 0.0; })) {
    trace.r_squared = 1.0;
    trace.verdict = Verdict::sync;
    return;
  }

  double floor = 0.0;
  if (subtract_floor) {
    const std::size_t block = std::max<std::size_t>(1, static_cast<std::size_t>(fit.block_fraction * len));
    for (std::size_t t = len - block; t < len; ++t) floor += err[t];
    floor /= static_cast<double>(block);
  }

  std::size_t h_eff = len;
  const double cutoff = fit.floor_rel * err[0];
  for (std::size_t t = 1; t < len; ++t) {
    if (err[t] <= cutoff) {
      h_eff = t;
      break;
    }
  }
  const std::size_t start = static_cast<std::size_t>(fit.skip_fraction * static_cast<double>(h_eff));

  std::vector<double> ts;
  std::vector<double> logs;
  for (std::size_t t = start; t < h_eff; ++t) {
    const double y = err[t] - floor;
    if (y > 0.0 && std::isfinite(y)) {
      ts.push_back(static_cast<double>(t));
      logs.push_back(std::log(y));
    }
  }

  if (ts.size() >= 2) {
    const double n = static_cast<double>(ts.size());
    double mt = 0.0, ml = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      mt += ts[k];
      ml += logs[k];
    }
    mt /= n;
    ml /= n;
    double stt = 0.0, stl = 0.0, sll = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      stt += (ts[k] - mt) * (ts[k] - mt);
      stl += (ts[k] - mt) * (logs[k] - ml);
      sll += (logs[k] - ml) * (logs[k] - ml);
    }
    const double slope = stl / stt;
    const double intercept = ml - slope * mt;
    trace.beta_hat = std::exp(slope);
    trace.K_hat = std::exp(intercept);
    trace.r_squared = sll > 0.0 ? (stl * stl) / (stt * sll) : 1.0;
  }

  if (ts.size() >= 2 && trace.beta_hat < 1.0 - fit.beta_margin && trace.r_squared >= fit.min_r_squared) {
    trace.verdict = Verdict::sync;
    return;
  }

  const std::size_t window = h_eff - start;
  const std::size_t block = std::max<std::size_t>(1, static_cast<std::size_t>(fit.block_fraction * window));
  double first = 0.0, last = 0.0;
  for (std::size_t t = 0; t < block; ++t) {
    first += err[start + t];
    last += err[h_eff - block + t];
  }
  trace.verdict = (last >= fit.growth_factor * first) ? Verdict::desync : Verdict::inconclusive;
}

namespace {

struct TrialResult {
  bool diverged = false;
  std::vector<double> err;
};

TrialResult run_trial(const NetworkSimConfig& cfg, const NetworkStepper& stepper, int trial) {
  const std::uint64_t s = cfg.seed;
  const auto t = static_cast<std::uint64_t>(trial);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
  std::mt19937_64 rng(seq);

  const int n_nodes = stepper.n_nodes();
  const Eigen::Index n = stepper.state_dim();
  Vector x(static_cast<Eigen::Index>(n_nodes) * n);
  std::normal_distribution<double> init(0.0, 1.0);
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = cfg.x0_center + cfg.x0_spread * init(rng);

  TrialResult r;
  r.err.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
  r.err.push_back(sync_error(x, n_nodes, n));
  for (int step = 0; step < cfg.horizon; ++step) {
    stepper.step(x, rng);
    const double e = sync_error(x, n_nodes, n);
    if (!std::isfinite(e) || !x.allFinite()) {
      r.diverged = true;
      r.err.clear();
      return r;
    }
    r.err.push_back(e);
  }
  return r;
}

}  // namespace

SyncTrace simulate(const NetworkSimConfig& cfg) {
  cfg.validate();
  const NetworkStepper stepper(cfg);

  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
  const int workers = std::min(cfg.threads, cfg.trials);
  if (workers <= 1) {
    for (int k = 0; k < cfg.trials; ++k) results[static_cast<std::size_t>(k)] = run_trial(cfg, stepper, k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int k = next++; k < cfg.trials; k = next++) {
          results[static_cast<std::size_t>(k)] = run_trial(cfg, stepper, k);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  SyncTrace trace;
  trace.trials = cfg.trials;
  trace.err.assign(static_cast<std::size_t>(cfg.horizon) + 1, 0.0);
  int kept = 0;
  for (const TrialResult& r : results) {
    if (r.diverged) {
      ++trace.diverged_count;
      continue;
    }
    ++kept;
    for (std::size_t t = 0; t < r.err.size(); ++t) trace.err[t] += r.err[t];
  }
  if (kept > 0) {
    for (double& e : trace.err) e /= static_cast<double>(kept);
  }

  if (2 * trace.diverged_count > cfg.trials) {
    trace.verdict = Verdict::desync;
    trace.diagnostic = std::to_string(trace.diverged_count) + " of " + std::to_string(cfg.trials) +
                       " trials diverged";
    if (kept > 0) {
      SyncTrace fitted = trace;
      fit_trace(fitted, cfg.fit, cfg.additive_noise > 0.0);
      trace.K_hat = fitted.K_hat;
      trace.beta_hat = fitted.beta_hat;
      trace.r_squared = fitted.r_squared;
    }
    return trace;
  }
  fit_trace(trace, cfg.fit, cfg.additive_noise > 0.0);
  if (trace.diverged_count > 0) {
    trace.diagnostic = std::to_string(trace.diverged_count) + " diverged trials excluded";
  }
  return trace;
}

// ---------------------------------------------------------------------------

ChuaContinuous chua_continuous() {
  ChuaContinuous c;
  c.A.resize(3, 3);
  c.A << 0.0, 7.5, 0.0,
         1.0, -1.0, 1.0,
         0.0, -15.0, 0.0;
  c.B.resize(3, 1);
  c.B << 7.5, 0.0, 0.0;
  c.C.resize(1, 3);
  c.C << 1.0, 0.0, 0.0;
  return c;
}

LureSystem build_chua_network_system(const ChuaParams& p, double sample_time, const Matrix& D,
                                     const Matrix& D1, double loop_shift) {
  if (!(std::isfinite(sample_time) && sample_time > 0.0)) {
    throw InputError("sample time must be positive");
  }
  if (D.rows() != 1 || D.cols() != 1 || D1.rows() != 1 || D1.cols() != 1) {
    throw InputError("Chua sector matrices D and D1 must be 1x1");
  }
  const ChuaContinuous c = chua_continuous();
  const DiscreteSystem d = zoh_discretize(c.A, c.B, sample_time);

  if (!std::isfinite(loop_shift)) throw InputError("loop shift must be finite");
  LureSystem sys{d.a - loop_shift * d.b * c.C, d.b, c.C, D, D1};
  sys.validate();

  const Nonlinearity phi = Nonlinearity::chua(p).with_loop_shift(loop_shift);
  std::vector<Vector> grid;
  for (int k = -400; k <= 400; ++k) grid.push_back(Vector::Constant(1, 0.025 * k));
  if (!sector_check([&](const Vector& y) { return phi(y); }, D, D1, grid)) {
    std::ostringstream os;
    os << "Chua nonlinearity with slopes (epsilon=" << p.epsilon << ", m0=" << p.m0 << ", m1=" << p.m1
       << ") and loop shift " << loop_shift << " violates the sector bounds D=" << D(0, 0) << ", D1=" << D1(0, 0);
    throw InputError(os.str());
  }
  return sys;
}

void write_trace_csv(std::ostream& os, const SyncTrace& trace) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "t,err\n";
  for (std::size_t t = 0; t < trace.err.size(); ++t) out << t << ',' << trace.err[t] << '\n';
  out << "# K_hat," << trace.K_hat << '\n';
  out << "# beta_hat," << trace.beta_hat << '\n';
  out << "# r_squared," << trace.r_squared << '\n';
  out << "# verdict," << to_string(trace.verdict) << '\n';
  out << "# diverged_count," << trace.diverged_count << '\n';
  os << out.str();
}

}  // namespace lursync
