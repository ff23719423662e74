#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pfb/config.hpp"
#include "pfb/core.hpp"
#include "pfb/metrics.hpp"
#include "pfb/transforms.hpp"

namespace pfb {

/// 0 means "all available cores".
std::size_t resolve_jobs(std::size_t jobs);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
/// to index-addressed slots so the outcome does not depend on scheduling. The
/// first exception thrown by any task is rethrown after all threads join.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::min(resolve_jobs(jobs), n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// -- Replicates ----------------------------------------------------------------

struct ReplicateBatch {
  AlgorithmSpec algorithm;
  MetricsSummary summary;
  std::vector<ReplicateMetrics> replicates;  // by replicate index
};

/// R replicates keyed 0..R-1 on `tapes`.
ReplicateBatch replicate_run(const AlgorithmSpec& algorithm, const Instance& instance, const TapeSet& tapes,
                             std::size_t replicates, std::size_t jobs = 0);

/// Per arm, mean and SE over replicates of FOC_i - f_i APC_i.
std::vector<MeanSe> feedback_identity_gap(const ReplicateBatch& batch, const Instance& instance);

// -- Monotonicity ----------------------------------------------------------------

struct MonotonicityResult {
  AlgorithmSpec algorithm;
  ArmIndex arm = 0;
  Coupling coupling = Coupling::kCoupled;
  double tolerance = 0.0;
  std::vector<double> f_grid;                // sorted ascending
  std::vector<ReplicateBatch> points;        // one per grid value
  std::vector<MeanSe> apc_difference;        // point g+1 minus point g
  std::vector<MeanSe> foc_difference;
  MonotonicityVerdict apc_verdict;
  MonotonicityVerdict foc_verdict;
};

/// Coupled mode reuses one tape set for every grid point so only the swept
/// arm's feedback threshold changes; differences get paired SEs. Independent
/// mode draws fresh tapes per point and pools SEs.
MonotonicityResult monotonicity_sweep(const AlgorithmSpec& algorithm, const Instance& base, ArmIndex arm,
                                      std::vector<double> f_grid, Coupling coupling, std::uint64_t seed,
                                      std::size_t replicates, std::optional<double> tolerance = {},
                                      std::size_t jobs = 0);

// -- Correlation study -------------------------------------------------------------

/// Native parameter ranges of the instance generator for one algorithm and the
/// affine map into canonical losses: loss = offset + sign * raw / scale.
struct GeneratorShape {
  std::string quantity;     // "utility" or "loss"
  double raw_low = 0.0;
  double raw_high = 1.0;
  double raw_stddev = 0.1;
  double scale = 1.0;
};

GeneratorShape generator_shape(const std::string& algorithm_id);

/// Instance `instance_id` for `algorithm_id`: means uniform over the native
/// range, f_i uniform on (0,1), Gaussian noise, clipped to [0,1] after mapping.
Instance generate_correlation_instance(const std::string& algorithm_id, const GeneratorConfig& generator,
                                       const TapeSet& tapes, std::size_t instance_id);

struct CorrelationRow {
  std::string algorithm;
  std::size_t instance_id = 0;
  double pearson_apc = 0.0;  // NaN when undefined (zero variance)
  double pearson_foc = 0.0;
};

struct CorrelationStats {
  std::string algorithm;
  std::size_t defined = 0;
  double apc_mean = 0.0, apc_min = 0.0, apc_max = 0.0;
  double foc_mean = 0.0, foc_min = 0.0, foc_max = 0.0;
};

struct CorrelationResult {
  std::vector<CorrelationRow> rows;
  std::vector<CorrelationStats> stats;
};

std::vector<AlgorithmSpec> default_correlation_algorithms();

CorrelationResult correlation_study(const GeneratorConfig& generator, const std::vector<AlgorithmSpec>& algorithms,
                                    std::uint64_t seed, std::size_t jobs = 0);

// -- Fig 1 ----------------------------------------------------------------------------

struct Fig1Curve {
  std::string name;       // "instance1" or "instance2"
  double arm1_loss = 0.0;
  double arm2_loss = 0.0;
  std::vector<GridEstimate> apc;  // APC of the first arm per f on the grid
  double spearman = 0.0;
  MonotonicityVerdict verdict;
};

struct Fig1Result {
  std::size_t horizon = 0;
  double other_arm_f = 1.0;
  std::vector<Fig1Curve> curves;
};

/// Simplified 3-Phase EXP3 on the two constant-loss instances; the first arm's
/// f is swept, the second arm's f is held at `other_arm_f`.
Fig1Result fig1_reproduction(const Fig1Config& config, std::uint64_t seed, std::size_t replicates,
                             std::size_t jobs = 0);

// -- Linear-regret demonstration ------------------------------------------------------

/// Arm 1: loss 0, f = 1/4. Arm 2: loss 1/2, f = 1.
Instance prop3_instance(std::size_t horizon);
/// Full-feedback twin: arm 1 has loss 1 w.p. 3/4 (else 0), arm 2 loss 1/2.
Instance prop3_twin_instance(std::size_t horizon);

struct RegretPoint {
  std::size_t horizon = 0;
  MeanSe regret;
};

struct RegretCurve {
  std::string label;  // algorithm id, optionally suffixed with the instance
  std::vector<RegretPoint> points;
  std::vector<double> growth_ratios;  // regret(h_{k+1}) / regret(h_k)
};

struct Prop3Result {
  RegretCurve feedback;   // the probabilistic-feedback instance
  RegretCurve twin;
};

Prop3Result prop3_demo(const std::vector<std::size_t>& horizons, std::uint64_t seed, std::size_t replicates,
                       std::size_t jobs = 0);

RegretCurve regret_sweep(const AlgorithmSpec& algorithm, const Instance& instance,
                         const std::vector<std::size_t>& horizons, std::uint64_t seed, std::size_t replicates,
                         std::size_t jobs = 0);

// -- Simulated-oracle equivalence ------------------------------------------------------

struct OracleArm {
  MeanSe real_apc;
  MeanSe simulated_apc;
  double difference = 0.0;
  double combined_se = 0.0;
  bool within = false;  // |difference| <= 3 combined_se
};

struct OracleResult {
  BaseAlgorithm base = BaseAlgorithm::kUcb;
  std::vector<double> oracle_feedback_probs;
  std::vector<OracleArm> arms;
  bool all_within = false;
};

/// Real BBPull(base) against the simulated driver on independent tapes.
OracleResult oracle_equivalence(BaseAlgorithm base, const Instance& instance,
                                std::optional<std::vector<double>> oracle_feedback_probs, std::uint64_t seed,
                                std::size_t replicates, std::size_t jobs = 0);

// -- Phase-2 estimator moments -----------------------------------------------------------

struct EstimatorMoments {
  double f = 0.0;
  std::size_t replicates = 0;
  MeanSe p_e;
  MeanSe p_e_squared;
  MeanSe p_lr;
};

/// Runs full 3-Phase EXP3 on a one-arm instance and collects P^E and P^LR.
EstimatorMoments estimator_moments(double f, std::uint64_t seed, std::size_t replicates, std::size_t jobs = 0);

}  // namespace pfb
