#pragma once

#include <optional>
#include <string>

namespace finsdet {

// Exit codes; each error family gets its own so callers can tell what
// failed without parsing stderr.
enum ExitCode {
  kOk = 0,
  kUnexpected = 1,
  kUsage = 2,
  kConfig = 3,        // config or expression parse errors
  kInput = 4,         // dimension mismatches, inconsistent parameters
  kFieldInvalid = 5,  // structure fails the Randers requirements
  kNumerical = 6,     // non-convergence, lost positive definiteness
  kIo = 7,            // missing or unwritable files
  kNoArtifacts = 8    // report found nothing to aggregate
};

struct CliOptions {
  std::string verb;
  std::string config_path;  // unused by `report`
  std::string out_dir;
  std::optional<long> seed;     // overrides config seeds
  std::optional<long> samples;  // overrides config sample counts
};

// Runs one experiment verb; returns the exit code. Primary outputs are
// byte-deterministic for a fixed config and seed; timestamps go to the
// .meta.json side files only.
int run_experiment(const CliOptions& options);

}  // namespace finsdet
