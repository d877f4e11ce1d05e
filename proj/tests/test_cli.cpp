#include "cli/commands.hpp"
#include "cli/config.hpp"

#include "lursync/errors.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace lursync::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kConfigs = LURSYNC_CONFIG_DIR;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& name) { return json::parse(read_file(kConfigs / name)); }

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("lursync_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~TempDir() { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

using Command = int (*)(const CommandOptions&, std::ostream&, std::ostream&);

Run run(Command cmd, const CommandOptions& opts) {
  std::ostringstream out, err;
  const int code = cmd(opts, out, err);
  return {code, out.str(), err.str()};
}

Run run(Command cmd, const std::string& config) { return run(cmd, CommandOptions{config}); }

std::string parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

// ---------------------------------------------------------------------------

TEST(Config, ShippedConfigsRoundTrip) {
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().filename().string());
    const std::string text = read_file(entry.path());
    const auto first = parse_config(text);
    const auto again = parse_config(serialize_config(first));
    EXPECT_EQ(first, again);
    EXPECT_EQ(serialize_config(first), serialize_config(again));
  }
}

TEST(Config, UnknownKeysNameTheirPath) {
  auto j = read_json("k3_scalar.json");
  j["analysis"]["solver"] = {{"dampin", 0.5}};
  EXPECT_NE(parse_error(j.dump()).find("analysis.solver.dampin: unknown key"), std::string::npos);

  j = read_json("k3_scalar.json");
  j["extra"] = 1;
  EXPECT_NE(parse_error(j.dump()).find("extra: unknown key"), std::string::npos);

  j = read_json("k3_scalar.json");
  j["graph"]["edges"][1]["weight"] = 2.0;
  EXPECT_NE(parse_error(j.dump()).find("graph.edges[1].weight"), std::string::npos);
}

TEST(Config, TypeAndRangeErrors) {
  auto j = read_json("k3_scalar.json");
  j["coupling"]["g"] = "0.2";
  EXPECT_NE(parse_error(j.dump()).find("coupling.g: expected a number"), std::string::npos);

  j = read_json("k3_scalar.json");
  j["sim"]["trials"] = 0;
  EXPECT_NE(parse_error(j.dump()).find("sim"), std::string::npos);

  j = read_json("k3_scalar.json");
  j["graph"]["edges"][0]["uncertain"] = false;
  EXPECT_FALSE(parse_error(j.dump()).empty()) << "deterministic link with nonzero variance";

  j = read_json("k3_scalar.json");
  j["sim"]["gamma_bar"] = 1.0;
  j["sim"]["gamma_bar_factor"] = 0.5;
  EXPECT_FALSE(parse_error(j.dump()).empty());
}

TEST(Config, ParseErrorReportsLineAndColumn) {
  const std::string msg = parse_error("{\n  \"system\": {\n    \"scalar\": { \"a\": 1.2,, }\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, DimensionMismatchIsInputError) {
  json j = read_json("k3_scalar.json");
  j["system"] = {{"matrices", {{"A", {{1.0, 0.0}, {0.0, 1.0}}}, {"B", {{1.0}, {0.0}}}, {"C", {{1.0, 0.0, 0.0}}},
                               {"D", {{2.0}}}}}};
  j["coupling"] = {{"G", {{0.1}, {0.0}}}};
  const TempDir tmp;
  const auto r = run(cmd_analyze, tmp.write("bad.json", j.dump()));
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("error: "), std::string::npos);

  j = read_json("k3_scalar.json");
  j["graph"]["edges"][0]["i"] = 7;
  EXPECT_EQ(run(cmd_analyze, tmp.write("node.json", j.dump())).code, kExitInputError);
}

TEST(Config, MissingFileIsInputError) {
  const auto r = run(cmd_analyze, "/nonexistent/lursync.json");
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("cannot read"), std::string::npos);
}

// ---------------------------------------------------------------------------

TEST(Analyze, FeasibleK3) {
  const auto r = run(cmd_analyze, (kConfigs / "k3_scalar.json").string());
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("spectra: lambda2=3"), std::string::npos);
  EXPECT_NE(r.out.find("check full: feasible"), std::string::npos);
  EXPECT_NE(r.out.find("check reduced: feasible"), std::string::npos);
  EXPECT_NE(r.out.find("verdict: feasible"), std::string::npos);
}

TEST(Analyze, DisconnectedNetworkIsInputError) {
  const auto r = run(cmd_analyze, (kConfigs / "disconnected.json").string());
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("disconnected"), std::string::npos) << r.err;
}

TEST(Analyze, CodAboveCriticalIsInfeasible) {
  auto j = read_json("k3_scalar.json");
  j["analysis"]["gamma_bar"] = 2.5;  // critical value 1.8333
  const TempDir tmp;
  const auto r = run(cmd_analyze, tmp.write("above.json", j.dump()));
  EXPECT_EQ(r.code, kExitNegative) << r.err;
  EXPECT_NE(r.out.find("check full: infeasible"), std::string::npos);
  EXPECT_NE(r.out.find("verdict: infeasible"), std::string::npos);
}

TEST(Analyze, TorusCheck) {
  const auto r = run(cmd_analyze, (kConfigs / "torus_sweep.json").string());
  EXPECT_NE(r.out.find("check torus: "), std::string::npos) << r.err;
  EXPECT_EQ(r.out.find("spectra:"), std::string::npos);
}

// ---------------------------------------------------------------------------

TEST(Margin, K3Margins) {
  const auto r = run(cmd_margin, (kConfigs / "k3_scalar.json").string());
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("critical_cod: 1.833"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("holds=true"), std::string::npos) << r.out;
}

TEST(Margin, SmallGainHoldsWithoutVariance) {
  auto j = read_json("k3_scalar.json");
  j["analysis"]["margins"] = {"small_gain"};
  j["analysis"]["small_gain_sigma_sq"] = 0.0;
  const TempDir tmp;
  const auto r = run(cmd_margin, tmp.write("sg.json", j.dump()));
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("sigma_sq=0 holds=true"), std::string::npos) << r.out;
}

TEST(Margin, DeterministicallyInfeasibleReport) {
  auto j = read_json("k3_scalar.json");
  j["system"]["scalar"]["a"] = 3.0;
  j["analysis"]["margins"] = {"critical_cod"};
  const TempDir tmp;
  const auto r = run(cmd_margin, tmp.write("unstable.json", j.dump()));
  EXPECT_EQ(r.code, kExitNegative) << r.err;
  EXPECT_NE(r.out.find("critical_cod: deterministically infeasible"), std::string::npos);
}

// ---------------------------------------------------------------------------

TEST(Torus, FullSweepCsvIsDeterministic) {
  const TempDir tmp;
  CommandOptions opts{(kConfigs / "torus_sweep.json").string()};
  opts.csv_path = tmp.path("a.csv");
  const auto first = run(cmd_torus, opts);
  ASSERT_EQ(first.code, kExitOk) << first.err;
  opts.csv_path = tmp.path("b.csv");
  ASSERT_EQ(run(cmd_torus, opts).code, kExitOk);

  const std::string csv = read_file(tmp.path("a.csv"));
  EXPECT_EQ(csv, read_file(tmp.path("b.csv")));
  std::istringstream lines(csv);
  std::string header, line;
  std::getline(lines, header);
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 250);
  EXPECT_NE(first.out.find("optimal k per d:"), std::string::npos);
  EXPECT_NE(first.out.find("d=1 k=12"), std::string::npos) << first.out;
}

TEST(Torus, DefaultSweepIsTheConfiguredCell) {
  auto j = read_json("torus_sweep.json");
  j["analysis"].erase("sweep");
  const TempDir tmp;
  const auto r = run(cmd_torus, tmp.write("cell.json", j.dump()));
  EXPECT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(row.rfind("1,1,", 0), 0u) << row;
}

TEST(Torus, RejectsNonScalarSystem) {
  const auto r = run(cmd_torus, (kConfigs / "k3_scalar.json").string());
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("torus"), std::string::npos);
}

// ---------------------------------------------------------------------------

TEST(Simulate, SeededRerunIsByteIdentical) {
  auto j = read_json("k3_scalar.json");
  j["sim"]["trials"] = 20;
  j["sim"]["horizon"] = 200;
  const TempDir tmp;
  CommandOptions opts{tmp.write("sim.json", j.dump())};
  opts.csv_path = tmp.path("a.csv");
  const auto first = run(cmd_simulate, opts);
  EXPECT_EQ(first.code, kExitOk) << first.err;
  EXPECT_NE(first.out.find("verdict: sync"), std::string::npos);

  opts.csv_path = tmp.path("b.csv");
  opts.threads = 3;
  EXPECT_EQ(run(cmd_simulate, opts).code, kExitOk);
  EXPECT_EQ(read_file(tmp.path("a.csv")), read_file(tmp.path("b.csv")));

  opts.csv_path = tmp.path("c.csv");
  opts.seed = 8;
  run(cmd_simulate, opts);
  EXPECT_NE(read_file(tmp.path("a.csv")), read_file(tmp.path("c.csv")));
  EXPECT_EQ(read_file(tmp.path("a.csv")).rfind("t,err\n0,", 0), 0u);
}

TEST(Simulate, MissingSimBlockIsInputError) {
  const auto r = run(cmd_simulate, (kConfigs / "torus_sweep.json").string());
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("sim"), std::string::npos);
}

}  // namespace
}  // namespace lursync::cli
