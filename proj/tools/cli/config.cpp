#include "config.hpp"

#include "lursync/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace lursync::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError("config: " + path + ": " + what);
}

std::string child(const std::string& path, const std::string& key) { return path + "." + key; }

std::string child(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) fail(child(path, key), "unknown key");
  }
}

const json& member(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(child(path, key), "missing required key");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < -2147483647LL || v > 2147483647LL) fail(path, "integer out of range");
  return static_cast<int>(v);
}

std::uint64_t as_u64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return j.get<std::uint64_t>();
  fail(path, "expected a non-negative integer");
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

void read_number(const json& j, const std::string& path, const char* key, double& out) {
  if (auto it = j.find(key); it != j.end()) out = as_number(*it, child(path, key));
}

void read_int(const json& j, const std::string& path, const char* key, int& out) {
  if (auto it = j.find(key); it != j.end()) out = as_int(*it, child(path, key));
}

void read_optional(const json& j, const std::string& path, const char* key,
                   std::optional<double>& out) {
  if (auto it = j.find(key); it != j.end()) out = as_number(*it, child(path, key));
}

Rows as_rows(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  Rows rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto rp = child(path, r);
    if (!j[r].is_array() || j[r].empty()) fail(rp, "expected a non-empty array of numbers");
    std::vector<double> row;
    for (std::size_t c = 0; c < j[r].size(); ++c) row.push_back(as_number(j[r][c], child(rp, c)));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(rp, "row has " + std::to_string(row.size()) + " entries, expected " +
                   std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json rows_json(const Rows& rows) {
  json out = json::array();
  for (const auto& row : rows) out.push_back(row);
  return out;
}

Matrix to_matrix(const Rows& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Parsing

ChuaParams parse_chua_slopes(const json& j, const std::string& path) {
  ChuaParams p;
  read_number(j, path, "epsilon", p.epsilon);
  read_number(j, path, "m0", p.m0);
  read_number(j, path, "m1", p.m1);
  return p;
}

NonlinearitySpec parse_nonlinearity(const json& j, const std::string& path) {
  allow_keys(j, path, {"kind", "coefficient", "epsilon", "m0", "m1"});
  NonlinearitySpec s;
  const auto kind = as_string(member(j, path, "kind"), child(path, "kind"));
  if (kind == "zero") {
    s.kind = Nonlinearity::Kind::zero;
  } else if (kind == "linear") {
    s.kind = Nonlinearity::Kind::linear;
  } else if (kind == "cubic") {
    s.kind = Nonlinearity::Kind::cubic;
  } else if (kind == "chua") {
    s.kind = Nonlinearity::Kind::chua;
  } else {
    fail(child(path, "kind"), "unknown nonlinearity '" + kind + "' (zero, linear, cubic, chua)");
  }
  read_number(j, path, "coefficient", s.coefficient);
  if (s.kind == Nonlinearity::Kind::chua) {
    s.chua = parse_chua_slopes(j, path);
  } else if (j.contains("epsilon") || j.contains("m0") || j.contains("m1")) {
    fail(path, "Chua slopes given for a non-Chua nonlinearity");
  }
  return s;
}

SystemSource parse_system(const json& j, const std::string& path) {
  allow_keys(j, path, {"matrices", "chua", "scalar", "nonlinearity"});
  const int sources = int(j.contains("matrices")) + int(j.contains("chua")) + int(j.contains("scalar"));
  if (sources != 1) fail(path, "exactly one of 'matrices', 'chua', 'scalar' is required");

  NonlinearitySpec phi;
  if (auto it = j.find("nonlinearity"); it != j.end()) {
    if (j.contains("chua")) fail(child(path, "nonlinearity"), "the Chua preset fixes its nonlinearity");
    phi = parse_nonlinearity(*it, child(path, "nonlinearity"));
  }

  if (auto it = j.find("matrices"); it != j.end()) {
    const auto p = child(path, "matrices");
    allow_keys(*it, p, {"A", "B", "C", "D", "D1"});
    MatrixSystem m;
    m.A = as_rows(member(*it, p, "A"), child(p, "A"));
    m.B = as_rows(member(*it, p, "B"), child(p, "B"));
    m.C = as_rows(member(*it, p, "C"), child(p, "C"));
    m.D = as_rows(member(*it, p, "D"), child(p, "D"));
    m.D1 = it->contains("D1") ? as_rows((*it)["D1"], child(p, "D1")) : m.D;
    m.phi = phi;
    return m;
  }
  if (auto it = j.find("chua"); it != j.end()) {
    const auto p = child(path, "chua");
    allow_keys(*it, p, {"T", "epsilon", "m0", "m1", "D", "D1", "loop_shift"});
    ChuaSystem c;
    read_number(*it, p, "T", c.T);
    c.slopes = parse_chua_slopes(*it, p);
    read_number(*it, p, "D", c.D);
    c.D1 = c.D;
    read_number(*it, p, "D1", c.D1);
    read_number(*it, p, "loop_shift", c.loop_shift);
    return c;
  }
  const auto& s = j["scalar"];
  const auto p = child(path, "scalar");
  allow_keys(s, p, {"a", "delta"});
  ScalarSystem sc;
  sc.a = as_number(member(s, p, "a"), child(p, "a"));
  sc.delta = as_number(member(s, p, "delta"), child(p, "delta"));
  sc.phi = phi;
  return sc;
}

GraphSource parse_graph(const json& j, const std::string& path) {
  require_object(j, path);
  if (j.contains("torus")) {
    allow_keys(j, path, {"torus"});
    const auto p = child(path, "torus");
    const auto& t = j["torus"];
    allow_keys(t, p, {"N", "k", "d", "mu", "sigma_sq"});
    TorusGraph g;
    g.spec.N = as_int(member(t, p, "N"), child(p, "N"));
    g.spec.k = as_int(member(t, p, "k"), child(p, "k"));
    g.spec.d = as_int(member(t, p, "d"), child(p, "d"));
    read_number(t, p, "mu", g.mu);
    read_number(t, p, "sigma_sq", g.sigma_sq);
    return g;
  }
  allow_keys(j, path, {"nodes", "edges"});
  EdgeListGraph g;
  g.nodes = as_int(member(j, path, "nodes"), child(path, "nodes"));
  const auto& edges = member(j, path, "edges");
  const auto ep = child(path, "edges");
  if (!edges.is_array()) fail(ep, "expected an array");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto p = child(ep, e);
    allow_keys(edges[e], p, {"i", "j", "mu", "sigma_sq", "uncertain"});
    EdgeSpec s;
    s.i = as_int(member(edges[e], p, "i"), child(p, "i"));
    s.j = as_int(member(edges[e], p, "j"), child(p, "j"));
    read_number(edges[e], p, "mu", s.mu);
    read_number(edges[e], p, "sigma_sq", s.sigma_sq);
    if (auto it = edges[e].find("uncertain"); it != edges[e].end()) {
      s.uncertain = as_bool(*it, child(p, "uncertain"));
    }
    if (!s.uncertain && s.sigma_sq != 0.0) fail(child(p, "sigma_sq"), "deterministic link with nonzero variance");
    g.edges.push_back(s);
  }
  return g;
}

CouplingSource parse_coupling(const json& j, const std::string& path) {
  allow_keys(j, path, {"g", "G"});
  if (j.contains("g") == j.contains("G")) fail(path, "exactly one of 'g', 'G' is required");
  if (j.contains("g")) return as_number(j["g"], child(path, "g"));
  return as_rows(j["G"], child(path, "G"));
}

std::vector<std::string> parse_names(const json& j, const std::string& path,
                                     std::initializer_list<const char*> allowed) {
  if (!j.is_array()) fail(path, "expected an array of names");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto name = as_string(j[i], child(path, i));
    if (!ok.contains(name)) fail(child(path, i), "unknown entry '" + name + "'");
    out.push_back(std::move(name));
  }
  return out;
}

SolverOptions parse_solver(const json& j, const std::string& path) {
  allow_keys(j, path, {"max_iterations", "damping", "residual_tol", "divergence_bound", "pd_margin",
                       "r_scale", "max_backtracks", "max_state_dim"});
  SolverOptions o;
  read_int(j, path, "max_iterations", o.max_iterations);
  read_number(j, path, "damping", o.damping);
  read_number(j, path, "residual_tol", o.residual_tol);
  read_number(j, path, "divergence_bound", o.divergence_bound);
  read_number(j, path, "pd_margin", o.pd_margin);
  read_number(j, path, "r_scale", o.r_scale);
  read_int(j, path, "max_backtracks", o.max_backtracks);
  int cap = static_cast<int>(o.max_state_dim);
  read_int(j, path, "max_state_dim", cap);
  o.max_state_dim = cap;
  return o;
}

std::pair<int, int> parse_range(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) fail(path, "expected [lo, hi]");
  return {as_int(j[0], child(path, 0)), as_int(j[1], child(path, 1))};
}

AnalysisBlock parse_analysis(const json& j, const std::string& path) {
  allow_keys(j, path, {"checks", "margins", "gamma_bar", "small_gain_sigma_sq", "solver", "cod", "sweep"});
  AnalysisBlock a;
  if (auto it = j.find("checks"); it != j.end()) {
    a.checks = parse_names(*it, child(path, "checks"), {"full", "reduced", "torus"});
  }
  if (auto it = j.find("margins"); it != j.end()) {
    a.margins = parse_names(*it, child(path, "margins"), {"small_gain", "critical_cod"});
  }
  read_optional(j, path, "gamma_bar", a.gamma_bar);
  read_optional(j, path, "small_gain_sigma_sq", a.small_gain_sigma_sq);
  if (auto it = j.find("solver"); it != j.end()) a.solver = parse_solver(*it, child(path, "solver"));
  if (auto it = j.find("cod"); it != j.end()) {
    const auto p = child(path, "cod");
    allow_keys(*it, p, {"tolerance", "upper_cap"});
    read_number(*it, p, "tolerance", a.cod.tolerance);
    read_number(*it, p, "upper_cap", a.cod.upper_cap);
  }
  if (auto it = j.find("sweep"); it != j.end()) {
    const auto p = child(path, "sweep");
    allow_keys(*it, p, {"k", "d"});
    SweepRanges r;
    std::tie(r.k_min, r.k_max) = parse_range(member(*it, p, "k"), child(p, "k"));
    std::tie(r.d_min, r.d_max) = parse_range(member(*it, p, "d"), child(p, "d"));
    a.sweep = r;
  }
  return a;
}

SimBlock parse_sim(const json& j, const std::string& path) {
  allow_keys(j, path, {"horizon", "trials", "seed", "noise_model", "additive_noise", "x0_center",
                       "x0_spread", "gamma_bar", "gamma_bar_factor", "fit"});
  SimBlock s;
  read_int(j, path, "horizon", s.horizon);
  read_int(j, path, "trials", s.trials);
  if (auto it = j.find("seed"); it != j.end()) s.seed = as_u64(*it, child(path, "seed"));
  if (auto it = j.find("noise_model"); it != j.end()) {
    const auto name = as_string(*it, child(path, "noise_model"));
    try {
      s.noise_model = noise_model_from_string(name);
    } catch (const InputError& e) {
      fail(child(path, "noise_model"), e.what());
    }
  }
  read_number(j, path, "additive_noise", s.additive_noise);
  read_number(j, path, "x0_center", s.x0_center);
  read_number(j, path, "x0_spread", s.x0_spread);
  read_optional(j, path, "gamma_bar", s.gamma_bar);
  read_optional(j, path, "gamma_bar_factor", s.gamma_bar_factor);
  if (s.gamma_bar && s.gamma_bar_factor) fail(path, "'gamma_bar' and 'gamma_bar_factor' are exclusive");
  if (auto it = j.find("fit"); it != j.end()) {
    const auto p = child(path, "fit");
    allow_keys(*it, p, {"skip_fraction", "floor_rel", "beta_margin", "min_r_squared", "growth_factor",
                        "block_fraction"});
    read_number(*it, p, "skip_fraction", s.fit.skip_fraction);
    read_number(*it, p, "floor_rel", s.fit.floor_rel);
    read_number(*it, p, "beta_margin", s.fit.beta_margin);
    read_number(*it, p, "min_r_squared", s.fit.min_r_squared);
    read_number(*it, p, "growth_factor", s.fit.growth_factor);
    read_number(*it, p, "block_fraction", s.fit.block_fraction);
  }
  return s;
}

// 1-based line and column of a byte offset.
std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// ---------------------------------------------------------------------------
// Serialization

std::string kind_name(Nonlinearity::Kind k) {
  switch (k) {
    case Nonlinearity::Kind::zero: return "zero";
    case Nonlinearity::Kind::linear: return "linear";
    case Nonlinearity::Kind::cubic: return "cubic";
    case Nonlinearity::Kind::chua: return "chua";
  }
  return "zero";
}

json nonlinearity_json(const NonlinearitySpec& s) {
  json j{{"kind", kind_name(s.kind)}, {"coefficient", s.coefficient}};
  if (s.kind == Nonlinearity::Kind::chua) {
    j["epsilon"] = s.chua.epsilon;
    j["m0"] = s.chua.m0;
    j["m1"] = s.chua.m1;
  }
  return j;
}

struct SystemJson {
  json operator()(const MatrixSystem& m) const {
    return {{"matrices",
             {{"A", rows_json(m.A)}, {"B", rows_json(m.B)}, {"C", rows_json(m.C)}, {"D", rows_json(m.D)},
              {"D1", rows_json(m.D1)}}},
            {"nonlinearity", nonlinearity_json(m.phi)}};
  }
  json operator()(const ChuaSystem& c) const {
    return {{"chua",
             {{"T", c.T}, {"epsilon", c.slopes.epsilon}, {"m0", c.slopes.m0}, {"m1", c.slopes.m1},
              {"D", c.D}, {"D1", c.D1}, {"loop_shift", c.loop_shift}}}};
  }
  json operator()(const ScalarSystem& s) const {
    return {{"scalar", {{"a", s.a}, {"delta", s.delta}}}, {"nonlinearity", nonlinearity_json(s.phi)}};
  }
};

struct GraphJson {
  json operator()(const EdgeListGraph& g) const {
    json edges = json::array();
    for (const auto& e : g.edges) {
      edges.push_back({{"i", e.i}, {"j", e.j}, {"mu", e.mu}, {"sigma_sq", e.sigma_sq}, {"uncertain", e.uncertain}});
    }
    return {{"nodes", g.nodes}, {"edges", edges}};
  }
  json operator()(const TorusGraph& g) const {
    return {{"torus", {{"N", g.spec.N}, {"k", g.spec.k}, {"d", g.spec.d}, {"mu", g.mu}, {"sigma_sq", g.sigma_sq}}}};
  }
};

// ---------------------------------------------------------------------------
// Materialization

Nonlinearity make_nonlinearity(const NonlinearitySpec& s) {
  switch (s.kind) {
    case Nonlinearity::Kind::zero: return Nonlinearity::zero();
    case Nonlinearity::Kind::linear: return Nonlinearity::linear(s.coefficient);
    case Nonlinearity::Kind::cubic: return Nonlinearity::cubic(s.coefficient);
    case Nonlinearity::Kind::chua: return Nonlinearity::chua(s.chua);
  }
  return Nonlinearity::zero();
}

Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }

// Grid along each coordinate axis and the all-ones diagonal over [-10, 10].
std::vector<Vector> sector_grid(Eigen::Index m) {
  std::vector<Vector> grid;
  std::vector<Vector> dirs;
  for (Eigen::Index i = 0; i < m; ++i) dirs.push_back(Vector::Unit(m, i));
  if (m > 1) dirs.push_back(Vector::Ones(m));
  for (const auto& dir : dirs) {
    for (int s = -400; s <= 400; ++s) grid.push_back(dir * (0.025 * s));
  }
  return grid;
}

void check_sector(const SystemModel& model) {
  const auto& phi = model.phi;
  if (phi.kind() == Nonlinearity::Kind::zero) return;
  const auto grid = sector_grid(model.system.io_dim());
  const VectorFunction f = [&phi](const Vector& y) { return phi(y); };
  if (!sector_check(f, model.system.D, model.system.D1, grid)) {
    throw InputError("config: system.nonlinearity: violates the sector bounds given by D and D1 on [-10, 10]");
  }
}

}  // namespace

AnalysisConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw InputError("config: parse error at " + locate(text, at) + ": " + e.what());
  }
  const std::string path = "config";
  allow_keys(root, path, {"system", "graph", "coupling", "analysis", "sim"});
  AnalysisConfig cfg;
  cfg.system = parse_system(member(root, path, "system"), "system");
  cfg.graph = parse_graph(member(root, path, "graph"), "graph");
  cfg.coupling = parse_coupling(member(root, path, "coupling"), "coupling");
  if (auto it = root.find("analysis"); it != root.end()) cfg.analysis = parse_analysis(*it, "analysis");
  if (auto it = root.find("sim"); it != root.end()) cfg.sim = parse_sim(*it, "sim");
  validate_config(cfg);
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const AnalysisConfig& cfg) {
  json root;
  root["system"] = std::visit(SystemJson{}, cfg.system);
  root["graph"] = std::visit(GraphJson{}, cfg.graph);
  if (const auto* g = std::get_if<double>(&cfg.coupling)) {
    root["coupling"] = {{"g", *g}};
  } else {
    root["coupling"] = {{"G", rows_json(std::get<Rows>(cfg.coupling))}};
  }

  const auto& a = cfg.analysis;
  const auto& s = a.solver;
  json analysis{
      {"checks", a.checks},
      {"margins", a.margins},
      {"solver",
       {{"max_iterations", s.max_iterations}, {"damping", s.damping}, {"residual_tol", s.residual_tol},
        {"divergence_bound", s.divergence_bound}, {"pd_margin", s.pd_margin}, {"r_scale", s.r_scale},
        {"max_backtracks", s.max_backtracks}, {"max_state_dim", static_cast<int>(s.max_state_dim)}}},
      {"cod", {{"tolerance", a.cod.tolerance}, {"upper_cap", a.cod.upper_cap}}}};
  if (a.gamma_bar) analysis["gamma_bar"] = *a.gamma_bar;
  if (a.small_gain_sigma_sq) analysis["small_gain_sigma_sq"] = *a.small_gain_sigma_sq;
  if (a.sweep) {
    analysis["sweep"] = {{"k", {a.sweep->k_min, a.sweep->k_max}}, {"d", {a.sweep->d_min, a.sweep->d_max}}};
  }
  root["analysis"] = analysis;

  if (cfg.sim) {
    const auto& m = *cfg.sim;
    json sim{{"horizon", m.horizon},
             {"trials", m.trials},
             {"seed", m.seed},
             {"noise_model", std::string(to_string(m.noise_model))},
             {"additive_noise", m.additive_noise},
             {"x0_center", m.x0_center},
             {"x0_spread", m.x0_spread},
             {"fit",
              {{"skip_fraction", m.fit.skip_fraction}, {"floor_rel", m.fit.floor_rel},
               {"beta_margin", m.fit.beta_margin}, {"min_r_squared", m.fit.min_r_squared},
               {"growth_factor", m.fit.growth_factor}, {"block_fraction", m.fit.block_fraction}}}};
    if (m.gamma_bar) sim["gamma_bar"] = *m.gamma_bar;
    if (m.gamma_bar_factor) sim["gamma_bar_factor"] = *m.gamma_bar_factor;
    root["sim"] = sim;
  }
  return root.dump(2) + "\n";
}

SystemModel build_system(const AnalysisConfig& cfg) {
  SystemModel model;
  if (const auto* m = std::get_if<MatrixSystem>(&cfg.system)) {
    model.system = {to_matrix(m->A), to_matrix(m->B), to_matrix(m->C), to_matrix(m->D), to_matrix(m->D1)};
    model.system.validate();
    model.phi = make_nonlinearity(m->phi);
    check_sector(model);
  } else if (const auto* c = std::get_if<ChuaSystem>(&cfg.system)) {
    model.system = build_chua_network_system(c->slopes, c->T, scalar_matrix(c->D), scalar_matrix(c->D1),
                                             c->loop_shift);
    model.phi = Nonlinearity::chua(c->slopes).with_loop_shift(c->loop_shift);
  } else {
    const auto& s = std::get<ScalarSystem>(cfg.system);
    if (!(s.delta > 0.0)) fail("system.scalar.delta", "must be positive");
    const double half = s.delta / 2.0;
    model.system = {scalar_matrix(s.a), scalar_matrix(1.0), scalar_matrix(1.0), scalar_matrix(half),
                    scalar_matrix(half)};
    model.system.validate();
    model.phi = make_nonlinearity(s.phi);
    check_sector(model);
  }
  return model;
}

Matrix build_coupling(const AnalysisConfig& cfg, const LureSystem& sys) {
  Matrix G = std::holds_alternative<double>(cfg.coupling)
                 ? Matrix(std::get<double>(cfg.coupling) * sys.C.transpose())
                 : to_matrix(std::get<Rows>(cfg.coupling));
  if (G.rows() != sys.state_dim() || G.cols() != sys.C.rows()) {
    fail("coupling.G", "must be " + std::to_string(sys.state_dim()) + "x" + std::to_string(sys.C.rows()) +
                           ", got " + std::to_string(G.rows()) + "x" + std::to_string(G.cols()));
  }
  return G;
}

UncertainGraph build_graph(const AnalysisConfig& cfg, bool apply_override) {
  const auto& override_cod = cfg.analysis.gamma_bar;
  if (const auto* t = std::get_if<TorusGraph>(&cfg.graph)) {
    const double var = (apply_override && override_cod) ? *override_cod * t->mu : t->sigma_sq;
    return torus_graph(t->spec, t->mu, var);
  }
  const auto& g = std::get<EdgeListGraph>(cfg.graph);
  std::vector<DeterministicEdge> det;
  std::vector<UncertainEdge> unc;
  for (const auto& e : g.edges) {
    if (e.uncertain) {
      unc.push_back({e.i, e.j, e.mu, e.sigma_sq});
    } else {
      det.push_back({e.i, e.j, e.mu});
    }
  }
  UncertainGraph out(g.nodes, std::move(det), std::move(unc));
  if (apply_override && override_cod) return out.with_uniform_cod(*override_cod);
  return out;
}

void validate_config(const AnalysisConfig& cfg) {
  const auto model = build_system(cfg);
  build_coupling(cfg, model.system);
  if (const auto* t = std::get_if<TorusGraph>(&cfg.graph)) {
    t->spec.validate();
    if (!(t->mu > 0.0)) fail("graph.torus.mu", "must be positive");
    if (!(t->sigma_sq >= 0.0)) fail("graph.torus.sigma_sq", "must be non-negative");
  } else {
    build_graph(cfg, false);
  }

  const auto& a = cfg.analysis;
  if (a.gamma_bar && !(*a.gamma_bar >= 0.0)) fail("analysis.gamma_bar", "must be non-negative");
  if (a.small_gain_sigma_sq && !(*a.small_gain_sigma_sq >= 0.0)) {
    fail("analysis.small_gain_sigma_sq", "must be non-negative");
  }
  for (const auto& c : a.checks) {
    if (c == "torus" && !std::holds_alternative<TorusGraph>(cfg.graph)) {
      fail("analysis.checks", "'torus' needs a torus graph");
    }
  }
  if (!(a.cod.tolerance > 0.0)) fail("analysis.cod.tolerance", "must be positive");
  if (!(a.cod.upper_cap >= 1.0)) fail("analysis.cod.upper_cap", "must be at least 1");
  if (!(a.solver.max_iterations >= 1)) fail("analysis.solver.max_iterations", "must be at least 1");
  if (!(a.solver.damping > 0.0 && a.solver.damping <= 1.0)) fail("analysis.solver.damping", "must lie in (0, 1]");
  if (a.sweep) {
    const auto& r = *a.sweep;
    if (r.k_min < 1 || r.k_max < r.k_min) fail("analysis.sweep.k", "need 1 <= lo <= hi");
    if (r.d_min < 1 || r.d_max < r.d_min) fail("analysis.sweep.d", "need 1 <= lo <= hi");
  }
  if (cfg.sim) {
    const auto& s = *cfg.sim;
    if (s.horizon < 1) fail("sim.horizon", "must be at least 1");
    if (s.trials < 1) fail("sim.trials", "must be at least 1");
    if (s.additive_noise < 0.0) fail("sim.additive_noise", "must be non-negative");
    if (s.x0_spread < 0.0) fail("sim.x0_spread", "must be non-negative");
    if (s.gamma_bar && !(*s.gamma_bar >= 0.0)) fail("sim.gamma_bar", "must be non-negative");
    if (s.gamma_bar_factor && !(*s.gamma_bar_factor >= 0.0)) fail("sim.gamma_bar_factor", "must be non-negative");
  }
}

}  // namespace lursync::cli
