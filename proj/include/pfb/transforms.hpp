#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pfb/algorithms.hpp"
#include "pfb/core.hpp"

namespace pfb {

/// ceil(3 ln T / f*).
std::size_t bbdivide_block_size(double horizon, double f_star);

/// ceil((3 ln T / f*) (1 + f_i)).
std::size_t bbda_block_size(double horizon, double f_star, double f_arm);

/// Horizon handed to an algorithm wrapped by the divide-style transforms:
/// the number of full divide blocks, floor(T / B), and at least 2.
double wrapped_divide_horizon(std::size_t horizon, double f_star);

/// Throws ValidationError unless 0 < f_star <= min_i f_i.
void validate_f_star(const Instance& instance, double f_star);

// -- Black-box transforms ------------------------------------------------------
//
// Each driver consumes a freshly constructed (or reset) wrapped algorithm and
// produces the T-round trace. All randomness comes from `tapes` under the given
// replicate key.

/// Equal blocks of B rounds; one random observation per block (loss 1 if none);
/// the last T - B floor(T/B) rounds pull uniformly random arms.
RunTrace bb_divide_run(BanditAlgorithm& wrapped, const Instance& instance, double f_star,
                       const TapeSet& tapes, std::uint64_t replicate);

/// Pulls the chosen arm until its loss is observed, then feeds that loss.
RunTrace bb_pull_run(BanditAlgorithm& wrapped, const Instance& instance, const TapeSet& tapes,
                     std::uint64_t replicate);

/// Blocks of B_i rounds for the chosen arm i (feedback probabilities known).
/// A block cut short by the horizon feeds nothing. f* <= min_i f_i is the
/// caller's responsibility here; validate_algorithm enforces it.
RunTrace bb_da_run(BanditAlgorithm& wrapped, const Instance& instance, double f_star,
                   const TapeSet& tapes, std::uint64_t replicate);

/// Drives `wrapped` with pre-committed geometric block lengths Q_{j,φ} instead of
/// realized feedback; distributionally identical to bb_pull_run.
RunTrace simulated_bb_pull_run(BanditAlgorithm& wrapped, const Instance& instance,
                               const TapeSet& tapes, std::uint64_t replicate);

// -- Fused algorithms ----------------------------------------------------------

RunTrace bbpull_ucb_run(const Instance& instance, const TapeSet& tapes, std::uint64_t replicate);
RunTrace bbpull_aae_run(const Instance& instance, const TapeSet& tapes, std::uint64_t replicate);
RunTrace bbda_aae_run(const Instance& instance, double f_star, const TapeSet& tapes,
                      std::uint64_t replicate);

// -- EXP3 variants -------------------------------------------------------------

/// ℓ X / π · P^E for the pulled arm.
double exp3_loss_estimator(double loss, bool observed, double pi, double p_e);

/// sqrt(ln K / (T Σ P^LR)).
double exp3_learning_rate(std::size_t num_arms, double horizon, double p_lr_sum);

/// ceil(8 ln(T K)).
std::size_t three_phase_observation_target(std::size_t horizon, std::size_t num_arms);

struct ThreePhaseRun {
  RunTrace trace;
  std::vector<double> p_lr;       // mean rounds per observation (phase 1)
  std::vector<double> p_e;        // rounds to first observation (phase 2)
  std::size_t phase3_start = 0;   // t0; 0 when the horizon ran out before phase 3
  double eta = 0.0;
  Exp3State final_state;
};

/// Full mode estimates 1/f_i in phases 1-2; simplified mode sets P^LR = P^E = 1/f_i
/// and runs only phase 3 from round 1.
ThreePhaseRun three_phase_exp3_run(const Instance& instance, const TapeSet& tapes,
                                   std::uint64_t replicate, bool simplified);

/// Reward-form EXP3 applied without any feedback correction: an unobserved pull
/// contributes a zero reward estimate. η = sqrt(ln K / (T K)).
RunTrace exp3_naive_run(const Instance& instance, const TapeSet& tapes, std::uint64_t replicate);

// -- Dispatch by identifier ----------------------------------------------------

struct AlgorithmSpec {
  std::string id;
  std::optional<double> f_star;
};

/// Stable identifiers accepted by run_algorithm.
const std::vector<std::string>& algorithm_ids();

bool requires_f_star(const std::string& id);
bool requires_stochastic_losses(const std::string& id);

/// Rejects unknown ids, missing or out-of-range f*, and algorithm/instance
/// combinations outside the algorithm's contract.
void validate_algorithm(const AlgorithmSpec& spec, const Instance& instance);

RunTrace run_algorithm(const AlgorithmSpec& spec, const Instance& instance, const TapeSet& tapes,
                       std::uint64_t replicate);

}  // namespace pfb
