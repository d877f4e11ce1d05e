#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace lursync::cli;

  CLI::App app{"Mean-square synchronization certificates for Lur'e networks with uncertain links"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool csv, bool runtime) {
    sub->add_option("--config", opts.config_path, "Analysis config (JSON)")->required();
    if (csv) sub->add_option("--csv", opts.csv_path, "Output CSV path");
    if (runtime) {
      sub->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
      sub->add_option("--seed", seed, "Master seed, overrides sim.seed");
    }
  };
  auto* analyze = app.add_subcommand("analyze", "Run synchronization checks");
  auto* margin = app.add_subcommand("margin", "Compute small-gain and critical CoD margins");
  auto* torus = app.add_subcommand("torus", "Scalar torus margin sweep");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo synchronization run");
  add_common(analyze, false, false);
  add_common(margin, false, false);
  add_common(torus, true, true);
  add_common(sim, true, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }
  if (sim->count("--seed") > 0) opts.seed = seed;

  if (analyze->parsed()) return cmd_analyze(opts, std::cout, std::cerr);
  if (margin->parsed()) return cmd_margin(opts, std::cout, std::cerr);
  if (torus->parsed()) return cmd_torus(opts, std::cout, std::cerr);
  return cmd_simulate(opts, std::cout, std::cerr);
}
