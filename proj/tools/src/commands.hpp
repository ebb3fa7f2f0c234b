#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"

namespace skosens::cli {

enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitThreshold = 2, kExitIo = 3 };

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;  ///< --seed, overrides SKOSENS_SEED and sim.seed
  std::optional<std::string> env_seed;
  int workers = 1;
  std::optional<std::filesystem::path> out;
};

/// Loads the config, runs `kind` and writes its artifacts. Errors are reported
/// on `err` as a one-line JSON document and mapped to an exit code.
int run(Kind kind, const RunOptions& options, std::ostream& out, std::ostream& err);

/// z-score above which bar and laplace-check report a threshold failure.
inline constexpr double kZThreshold = 3.0;

}  // namespace skosens::cli
