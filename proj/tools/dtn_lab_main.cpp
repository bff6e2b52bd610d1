// dtn-lab: experiment runner.
//
//   dtn-lab <kind> --config <path> [--out <dir>] [--seed <u64>] [--threads <k>]
//
// Kinds: forward-convergence | cgo-check | carleman-check |
//        linearization-check | reconstruct | stability-curve
//
// Exit codes: 0 all checks passed, 2 an invariant check failed, 1 error.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dtnlab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numerical lab for semilinear Dirichlet-to-Neumann inversion"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds = {"forward-convergence", "cgo-check",
                                          "carleman-check",      "linearization-check",
                                          "reconstruct",         "stability-curve"};

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool seed_set = false, out_set = false, threads_set = false;

  for (const std::string& kind : kinds) {
    CLI::App* sub = app.add_subcommand(kind);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)")
        ->each([&](const std::string&) { out_set = true; });
    sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--threads", threads, "worker threads for the declared parallel loops")
        ->each([&](const std::string&) { threads_set = true; });
  }

  CLI11_PARSE(app, argc, argv);
  const std::string kind = app.get_subcommands().front()->get_name();

  dtnlab::RunOverrides overrides;
  if (out_set) overrides.out_dir = out_dir;
  if (seed_set) overrides.seed = seed;
  if (threads_set) overrides.threads = threads;

  dtnlab::RunResult result = dtnlab::run_experiment_file(config_path, overrides);

  // The config must agree with the subcommand; a mismatch is a usage error.
  if (result.exit_code == 0 || result.exit_code == 2) {
    if (result.summary_json.find("\"kind\": \"" + kind + "\"") == std::string::npos) {
      std::cerr << "config kind does not match subcommand '" << kind << "'\n";
      return 1;
    }
  }
  std::cout << result.summary_json;
  return result.exit_code;
}
