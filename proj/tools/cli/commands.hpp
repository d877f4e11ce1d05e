#pragma once

// Subcommand implementations. Each returns the process exit code:
// 0 success or feasible, 2 infeasible or desync, 1 usage or input error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace lursync::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNegative = 2;

struct CommandOptions {
  std::string config_path;
  std::optional<std::string> csv_path;
  int threads = 1;
  std::optional<std::uint64_t> seed;  // overrides sim.seed
};

int cmd_analyze(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_margin(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_torus(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace lursync::cli
