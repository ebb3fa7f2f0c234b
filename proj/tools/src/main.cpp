#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace skosens::cli;
  CLI::App app{"Reflected diffusions, derivative processes and stationary identities"};
  app.set_version_flag("--version", SKOSENS_VERSION);
  app.require_subcommand(1);

  RunOptions options;
  std::uint64_t seed = 0;
  options.workers = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));

  const Kind kinds[] = {Kind::kValidate, Kind::kSimulate, Kind::kDerivativeCheck, Kind::kBar,
                        Kind::kLaplaceCheck};
  const char* descriptions[] = {
      "check reflection matrices and dump the validated model",
      "simulate trajectories with their derivative processes and jumps",
      "finite-difference convergence table for the derivative process",
      "stationary residuals for exponential test functions",
      "one-dimensional Laplace transform against its closed form",
  };
  std::vector<std::pair<CLI::App*, Kind>> subs;
  for (std::size_t i = 0; i < std::size(kinds); ++i) {
    auto* sub = app.add_subcommand(to_string(kinds[i]), descriptions[i]);
    sub->add_option("--config", options.config, "key = value config file")->required();
    sub->add_option("--seed", seed, "master seed (overrides SKOSENS_SEED and sim.seed)");
    sub->add_option("--workers", options.workers, "replication worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", options.out, "output directory (overrides output_dir)");
    subs.emplace_back(sub, kinds[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  for (const auto& [sub, kind] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed") > 0) options.seed = seed;
    if (const char* env = std::getenv("SKOSENS_SEED"); env != nullptr) options.env_seed = env;
    return run(kind, options, std::cout, std::cerr);
  }
  return kExitInvalid;
}
