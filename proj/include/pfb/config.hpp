#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pfb/core.hpp"
#include "pfb/transforms.hpp"

namespace pfb {

inline constexpr int kConfigFormatVersion = 1;

/// Malformed or inconsistent configuration. The message starts with the dotted
/// path of the offending field.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class ExperimentKind { kRun, kMonotonicity, kCorrelate, kRegret, kFig1, kProp3, kOracleCheck };
enum class Coupling { kCoupled, kIndependent };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(Coupling c);

struct SweepConfig {
  ArmIndex arm = 0;
  std::vector<double> f_grid;
  std::optional<double> tolerance;  // default 1/T
};

/// Random-instance generator for the correlation study. Arm means are drawn
/// uniformly from the algorithm's native range and mapped to canonical losses.
struct GeneratorConfig {
  std::size_t num_instances = 100;
  std::size_t num_arms = 100;
  std::size_t horizon = 1000;
};

struct Fig1Config {
  std::size_t horizon = 1000;
  std::vector<double> f_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double other_arm_f = 1.0;
};

struct OracleConfig {
  BaseAlgorithm base = BaseAlgorithm::kUcb;
  /// Feedback probabilities handed to the simulated driver; defaults to the
  /// instance's own. A mismatch is the negative control.
  std::optional<std::vector<double>> oracle_feedback_probs;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kRun;
  std::uint64_t seed = 1;
  std::optional<std::size_t> replicates;  // per-kind default when absent
  Coupling coupling = Coupling::kCoupled;
  std::vector<AlgorithmSpec> algorithms;
  std::optional<InstanceSpec> instance;
  SweepConfig sweep;
  GeneratorConfig generator;
  std::vector<std::size_t> horizons;
  Fig1Config fig1;
  OracleConfig oracle;

  std::size_t replicate_count() const;
};

/// Parses JSON text; throws ConfigError naming the failing field.
ExperimentConfig parse_config(const std::string& json_text);

/// Reads and parses a file; a missing or unreadable file is a ConfigError naming the path.
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON echo. parse_config(config_to_json(c)) reproduces c.
std::string config_to_json(const ExperimentConfig& config, int indent = 2);

/// FNV-1a over the compact canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Checks cross-field consistency (instance present where needed, algorithms
/// compatible with the instance, grid ranges). Throws ConfigError.
void validate_config(const ExperimentConfig& config);

}  // namespace pfb
