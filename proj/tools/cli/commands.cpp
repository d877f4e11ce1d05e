#include "commands.hpp"

#include "config.hpp"

#include "lursync/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <string>

namespace lursync::cli {

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const ConvergenceError& e) {
    err << "error: numerical failure: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitInputError;
}

void print_spectra(std::ostream& out, const GraphSpectra& s) {
  out << "spectra: lambda2=" << s.lambda2 << " lambdaN=" << s.lambdaN << " lambda2_d=" << s.lambda2_d
      << " lambdaN_u=" << s.lambdaN_u << " tau=" << s.tau << " gamma_bar=" << s.gamma_bar << "\n";
}

void print_certificate(std::ostream& out, const std::string& name, const FeasibilityCertificate& c) {
  out << "check " << name << ": " << (c.feasible ? "feasible" : "infeasible")
      << " binding=" << to_string(c.binding_condition) << " residual=" << c.residual
      << " iterations=" << c.iterations << " slack=" << c.slack;
  if (!std::isnan(c.binding_eigenvalue)) out << " binding_eigenvalue=" << c.binding_eigenvalue;
  out << "\n";
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << std::setprecision(12);
  return f;
}

// Variance on every torus link after the analysis override.
double torus_variance(const AnalysisConfig& cfg, const TorusGraph& t) {
  return cfg.analysis.gamma_bar ? *cfg.analysis.gamma_bar * t.mu : t.sigma_sq;
}

}  // namespace

int cmd_analyze(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(opts.config_path);
    const auto model = build_system(cfg);
    const Matrix G = build_coupling(cfg, model.system);
    const auto& solver = cfg.analysis.solver;

    const bool torus_only = cfg.analysis.checks.size() == 1 && cfg.analysis.checks.front() == "torus";
    std::optional<UncertainGraph> graph;
    std::optional<GraphSpectra> spec;
    if (!torus_only) {
      graph = build_graph(cfg);
      spec = spectra(*graph);
      print_spectra(out, *spec);
    }

    bool all = true;
    for (const auto& name : cfg.analysis.checks) {
      FeasibilityCertificate c;
      if (name == "full") {
        c = check_full_sync_condition(*graph, model.system, G, solver);
      } else if (name == "reduced") {
        c = check_reduced_sync_condition(model.system, G, *spec, solver);
      } else {
        const auto& t = std::get<TorusGraph>(cfg.graph);
        c = check_torus_matrix_condition(t.spec, model.system, G, t.mu, torus_variance(cfg, t), solver);
      }
      print_certificate(out, name, c);
      all = all && c.feasible;
    }
    out << "verdict: " << (all ? "feasible" : "infeasible") << "\n";
    return all ? kExitOk : kExitNegative;
  });
}

int cmd_margin(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(opts.config_path);
    const auto model = build_system(cfg);
    const Matrix G = build_coupling(cfg, model.system);
    const auto& a = cfg.analysis;
    const auto margins = a.margins.empty() ? std::vector<std::string>{"critical_cod"} : a.margins;

    bool ok = true;
    for (const auto& name : margins) {
      if (name == "small_gain") {
        const auto base = build_graph(cfg);
        const double sigma_sq = a.small_gain_sigma_sq.value_or(0.0);
        const auto graph = base.with_uniform_variance(sigma_sq);
        const auto problem = build_full_sync_problem(graph, model.system, G, a.solver);
        const auto cert = solve_riccati(problem.riccati, a.solver);
        if (!cert.feasible) {
          out << "small_gain: riccati infeasible at sigma_sq=" << sigma_sq
              << " binding=" << to_string(cert.binding_condition) << "\n";
          ok = false;
          continue;
        }
        const auto sg = small_gain_margin(problem, *cert.P, sigma_sq);
        out << "small_gain: rho=" << sg.rho << " sigma_critical_sq=" << sg.sigma_critical_sq
            << " sigma_sq=" << sigma_sq << " holds=" << (sg.holds ? "true" : "false") << "\n";
        ok = ok && sg.holds;
      } else {
        const auto graph = build_graph(cfg, false);
        const auto spec = spectra(graph);
        print_spectra(out, spec);
        try {
          const double gc = critical_cod(model.system, G, spec, a.solver, a.cod);
          if (std::isinf(gc)) {
            out << "critical_cod: unbounded (feasible at the cap " << a.cod.upper_cap << ")\n";
          } else {
            out << "critical_cod: " << fixed3(gc) << "\n";
          }
        } catch (const DeterministicallyInfeasible&) {
          out << "critical_cod: deterministically infeasible\n";
          ok = false;
        }
      }
    }
    return ok ? kExitOk : kExitNegative;
  });
}

int cmd_torus(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(opts.config_path);
    const auto* scalar = std::get_if<ScalarSystem>(&cfg.system);
    if (!scalar) throw InputError("config: system: the torus sweep needs a 'scalar' system");
    const auto* torus = std::get_if<TorusGraph>(&cfg.graph);
    if (!torus) throw InputError("config: graph: the torus sweep needs a 'torus' graph");
    const auto* g = std::get_if<double>(&cfg.coupling);
    if (!g) throw InputError("config: coupling: the torus sweep needs a scalar 'g'");

    ScalarTorusParams p{scalar->a, scalar->delta, *g, torus->mu, torus_variance(cfg, *torus)};
    p.validate();
    const SweepRanges r = cfg.analysis.sweep.value_or(
        SweepRanges{torus->spec.k, torus->spec.k, torus->spec.d, torus->spec.d});
    const auto cells = torus_sweep(p, torus->spec.N, r.k_min, r.k_max, r.d_min, r.d_max);

    if (opts.csv_path) {
      auto f = open_csv(*opts.csv_path);
      write_sweep_csv(f, cells);
    } else {
      write_sweep_csv(out, cells);
    }
    out << "optimal k per d:\n";
    for (const auto& o : sweep_optima(cells)) {
      out << "  d=" << o.d << " k=";
      if (o.k) {
        out << *o.k << " rho_sm=" << o.rho_sm << "\n";
      } else {
        out << "none (no deterministically feasible cell)\n";
      }
    }
    return kExitOk;
  });
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(opts.config_path);
    if (!cfg.sim) throw InputError("config: sim: missing simulation block");
    const auto& s = *cfg.sim;
    const auto model = build_system(cfg);

    NetworkSimConfig sim;
    sim.system = model.system;
    sim.phi = model.phi;
    sim.G = build_coupling(cfg, model.system);
    sim.noise_model = s.noise_model;
    sim.additive_noise = s.additive_noise;
    sim.horizon = s.horizon;
    sim.trials = s.trials;
    sim.seed = opts.seed.value_or(s.seed);
    sim.x0_center = s.x0_center;
    sim.x0_spread = s.x0_spread;
    sim.threads = opts.threads;
    sim.fit = s.fit;

    if (const auto* t = std::get_if<TorusGraph>(&cfg.graph)) {
      if (s.gamma_bar_factor) {
        throw InputError("config: sim.gamma_bar_factor: not available for torus graphs");
      }
      const double var = s.gamma_bar ? *s.gamma_bar * t->mu : torus_variance(cfg, *t);
      sim.topology = TorusNetwork{t->spec, t->mu, var};
    } else {
      auto graph = build_graph(cfg);
      if (s.gamma_bar) {
        graph = graph.with_uniform_cod(*s.gamma_bar);
      } else if (s.gamma_bar_factor) {
        const auto base = build_graph(cfg, false);
        double gc = 0.0;
        try {
          gc = critical_cod(model.system, sim.G, spectra(base), cfg.analysis.solver, cfg.analysis.cod);
        } catch (const DeterministicallyInfeasible&) {
          throw InputError("config: sim.gamma_bar_factor: system is deterministically infeasible");
        }
        if (std::isinf(gc)) throw InputError("config: sim.gamma_bar_factor: critical CoD is unbounded");
        out << "critical_cod: " << fixed3(gc) << "\n";
        graph = base.with_uniform_cod(*s.gamma_bar_factor * gc);
      }
      out << "gamma_bar: " << graph.gamma_bar() << "\n";
      sim.topology = std::move(graph);
    }

    const auto trace = simulate(sim);
    if (opts.csv_path) {
      auto f = open_csv(*opts.csv_path);
      write_trace_csv(f, trace);
    }
    out << "K_hat: " << trace.K_hat << "\n"
        << "beta_hat: " << trace.beta_hat << "\n"
        << "r_squared: " << trace.r_squared << "\n"
        << "diverged_count: " << trace.diverged_count << "\n";
    if (!trace.diagnostic.empty()) out << "note: " << trace.diagnostic << "\n";
    out << "verdict: " << to_string(trace.verdict) << "\n";
    return trace.verdict == Verdict::sync ? kExitOk : kExitNegative;
  });
}

}  // namespace lursync::cli
