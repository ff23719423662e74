#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "pfb/config.hpp"

namespace pfb {

inline constexpr const char* kToolName = "pfbandit";
inline constexpr const char* kToolVersion = "0.1.0";

/// One file produced by an experiment; `content` is written verbatim.
struct Artifact {
  std::string filename;
  std::string content;
};

struct ExperimentOutput {
  std::vector<Artifact> artifacts;  // <kind>.csv then <kind>.json
  std::string summary;              // short human-readable verdict lines
};

/// Runs the experiment described by `config` and renders its CSV and JSON.
/// Output bytes depend only on the config (including seed), never on `jobs`.
/// Progress lines go to `progress` when non-null.
ExperimentOutput run_experiment(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress);

/// %.12g, with NaN written as "nan".
std::string format_number(double x);

}  // namespace pfb
