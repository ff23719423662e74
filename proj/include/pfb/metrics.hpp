#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfb/core.hpp"

namespace pfb {

struct ArmCounts {
  std::vector<std::size_t> apc;  // pulls per arm
  std::vector<std::size_t> foc;  // pulls with feedback observed
};

ArmCounts compute_apc_foc(const RunTrace& trace, std::size_t num_arms);

/// Σ_t ℓ̄_{i_t} − min_j Σ_t ℓ̄_j over the trace's rounds. Adversarial arms
/// contribute their tape value at t, so the comparator is the best fixed arm in
/// hindsight; stochastic arms contribute their true mean.
double pseudo_regret(const RunTrace& trace, const Instance& instance);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample sd / sqrt(n); 0 for n < 2
};

MeanSe mean_se(std::span<const double> xs);

/// Mean and SE of a[r] - b[r] (paired replicates).
MeanSe paired_difference(std::span<const double> a, std::span<const double> b);

/// Sample Pearson coefficient. Throws std::invalid_argument on length mismatch,
/// fewer than two points, or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson on average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct ReplicateMetrics {
  std::vector<double> apc;
  std::vector<double> foc;
  double regret = 0.0;
};

ReplicateMetrics replicate_metrics(const RunTrace& trace, const Instance& instance);

struct MetricsSummary {
  std::size_t replicates = 0;
  std::vector<double> apc_mean, apc_se;
  std::vector<double> foc_mean, foc_se;
  double regret_mean = 0.0;
  double regret_se = 0.0;
};

/// Aggregates in the order given; callers pass replicates sorted by index.
MetricsSummary summarize(std::span<const ReplicateMetrics> replicates);

enum class Measure { kApc, kFoc };
enum class MonotonicityLabel { kPositive, kNegative, kBalanced, kInconclusive };

std::string to_string(Measure m);
std::string to_string(MonotonicityLabel label);

struct GridEstimate {
  double f = 0.0;
  double mean = 0.0;
  double se = 0.0;
};

struct MonotonicityVerdict {
  Measure measure = Measure::kApc;
  ArmIndex arm = 0;
  MonotonicityLabel label = MonotonicityLabel::kInconclusive;
  double sigmas = 3.0;
  std::vector<GridEstimate> estimates;       // sorted by f
  std::vector<double> difference_se;         // SE used for each adjacent difference
};

/// Labels a curve with the 3-SE rules:
///   positive     every adjacent difference d has d - 3 se > 0
///   negative     every d + 3 se < 0
///   balanced     every |d| <= tolerance + 3 se
/// `difference_se`, when given, supplies the SE of each adjacent difference
/// (paired designs); otherwise the pooled sqrt(se_a² + se_b²) is used.
/// "Consistent with" the label on this instance, nothing stronger.
MonotonicityVerdict classify_monotonicity(std::vector<GridEstimate> estimates, double tolerance,
                                          std::optional<std::vector<double>> difference_se = {},
                                          double sigmas = 3.0);

}  // namespace pfb
