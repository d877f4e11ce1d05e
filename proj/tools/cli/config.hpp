#pragma once

// JSON analysis configuration. One file describes a system, a graph, the
// coupling and what to compute. Parsing validates structure and dimensions
// before any analysis runs; errors name the offending field.

#include "lursync/graph.hpp"
#include "lursync/margin.hpp"
#include "lursync/nonlinearity.hpp"
#include "lursync/prl.hpp"
#include "lursync/simulator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lursync::cli {

using Rows = std::vector<std::vector<double>>;

struct NonlinearitySpec {
  Nonlinearity::Kind kind = Nonlinearity::Kind::zero;
  double coefficient = 0.0;  // slope (linear) or cubic coefficient
  ChuaParams chua{};
  friend bool operator==(const NonlinearitySpec&, const NonlinearitySpec&) = default;
};

struct MatrixSystem {
  Rows A, B, C, D, D1;
  NonlinearitySpec phi;
  friend bool operator==(const MatrixSystem&, const MatrixSystem&) = default;
};

struct ChuaSystem {
  double T = 0.01;
  ChuaParams slopes{};
  double D = 1.6;
  double D1 = 1.6;
  double loop_shift = 0.0;
  friend bool operator==(const ChuaSystem&, const ChuaSystem&) = default;
};

/// A = a, B = C = 1, D = D1 = delta / 2.
struct ScalarSystem {
  double a = 0.0;
  double delta = 2.0;
  NonlinearitySpec phi;
  friend bool operator==(const ScalarSystem&, const ScalarSystem&) = default;
};

using SystemSource = std::variant<MatrixSystem, ChuaSystem, ScalarSystem>;

struct EdgeSpec {
  int i = 0;
  int j = 0;
  double mu = 1.0;
  double sigma_sq = 0.0;
  bool uncertain = false;
  friend bool operator==(const EdgeSpec&, const EdgeSpec&) = default;
};

struct EdgeListGraph {
  int nodes = 0;
  std::vector<EdgeSpec> edges;
  friend bool operator==(const EdgeListGraph&, const EdgeListGraph&) = default;
};

struct TorusGraph {
  TorusSpec spec;
  double mu = 1.0;
  double sigma_sq = 0.0;
  friend bool operator==(const TorusGraph&, const TorusGraph&) = default;
};

using GraphSource = std::variant<EdgeListGraph, TorusGraph>;

/// Scalar g means G = g C'.
using CouplingSource = std::variant<double, Rows>;

struct SweepRanges {
  int k_min = 1;
  int k_max = 1;
  int d_min = 1;
  int d_max = 1;
  friend bool operator==(const SweepRanges&, const SweepRanges&) = default;
};

struct AnalysisBlock {
  std::vector<std::string> checks{"reduced"};  // full | reduced | torus
  std::vector<std::string> margins;            // small_gain | critical_cod
  std::optional<double> gamma_bar;             // uniform CoD override on uncertain links
  std::optional<double> small_gain_sigma_sq;   // variance tested by the small-gain margin
  SolverOptions solver{};
  CodSearchOptions cod{};
  std::optional<SweepRanges> sweep;
  friend bool operator==(const AnalysisBlock&, const AnalysisBlock&) = default;
};

struct SimBlock {
  int horizon = 1000;
  int trials = 100;
  std::uint64_t seed = 0;
  NoiseModel noise_model = NoiseModel::gaussian;
  double additive_noise = 0.0;
  double x0_center = 0.0;
  double x0_spread = 1.0;
  std::optional<double> gamma_bar;         // uniform CoD on uncertain links
  std::optional<double> gamma_bar_factor;  // multiple of the computed critical CoD
  FitOptions fit{};
  friend bool operator==(const SimBlock&, const SimBlock&) = default;
};

struct AnalysisConfig {
  SystemSource system;
  GraphSource graph;
  CouplingSource coupling = 0.0;
  AnalysisBlock analysis;
  std::optional<SimBlock> sim;
  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

/// Parses and validates. Throws InputError naming the field or the JSON
/// line/column.
AnalysisConfig parse_config(const std::string& text);
AnalysisConfig load_config(const std::string& path);

std::string serialize_config(const AnalysisConfig& cfg);

// Materialized objects.
struct SystemModel {
  LureSystem system;
  Nonlinearity phi;
};
SystemModel build_system(const AnalysisConfig& cfg);
Matrix build_coupling(const AnalysisConfig& cfg, const LureSystem& sys);

/// Explicit graph, with the analysis gamma_bar override applied when given.
/// Torus graphs are materialized with independent links.
UncertainGraph build_graph(const AnalysisConfig& cfg, bool apply_override = true);

/// Checks every cross-block constraint by building the objects.
void validate_config(const AnalysisConfig& cfg);

}  // namespace lursync::cli
