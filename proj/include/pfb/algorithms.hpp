#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pfb/core.hpp"

namespace pfb {

/// Base algorithm for the deterministic-feedback setting.
///
/// Calls must alternate select() / feed(); the base class enforces this so a
/// transform that drops or duplicates a loss fails loudly instead of silently
/// desynchronizing the wrapped algorithm.
class BanditAlgorithm {
 public:
  virtual ~BanditAlgorithm() = default;

  ArmIndex select();
  void feed(ArmIndex arm, double loss);
  void reset();

  /// Completed select/feed pairs, i.e. φ - 1 while a decision is pending.
  std::size_t rounds_fed() const { return fed_; }
  bool awaiting_feed() const { return pending_; }

  virtual std::size_t num_arms() const = 0;
  virtual std::string name() const = 0;

 protected:
  virtual ArmIndex do_select() = 0;
  virtual void do_feed(ArmIndex arm, double loss) = 0;
  virtual void do_reset() = 0;

 private:
  bool pending_ = false;
  ArmIndex pending_arm_ = 0;
  std::size_t fed_ = 0;
};

// -- UCB ---------------------------------------------------------------------

/// Means are stored as utilities (negated losses).
struct UcbState {
  std::vector<std::size_t> pulls;
  std::vector<double> mean_utility;
  double horizon = 2.0;

  UcbState() = default;
  UcbState(std::size_t num_arms, double horizon);
  void update(ArmIndex arm, double loss);
};

/// μ + sqrt(6 ln T / n). Requires pulls >= 1.
double ucb_index(double mean_utility, std::size_t pulls, double horizon);

/// Smallest untried arm if any, otherwise argmax of ucb_index (ties to the smallest index).
ArmIndex ucb_select(const UcbState& state);

class UcbAlgorithm final : public BanditAlgorithm {
 public:
  UcbAlgorithm(std::size_t num_arms, double horizon);

  const UcbState& state() const { return state_; }
  std::size_t num_arms() const override { return state_.pulls.size(); }
  std::string name() const override { return "ucb"; }

 protected:
  ArmIndex do_select() override { return ucb_select(state_); }
  void do_feed(ArmIndex arm, double loss) override { state_.update(arm, loss); }
  void do_reset() override;

 private:
  UcbState state_;
};

// -- Active arm elimination --------------------------------------------------

/// floor(8 ln T · 4^s) + 1: observations per active arm in phase s.
std::size_t aae_phase_quota(std::size_t phase, double horizon);

/// ceil(2^{2s+1} ln T): blocks per active arm in phase s of the divide-adjusted variant.
std::size_t aae_bbda_phase_blocks(std::size_t phase, double horizon);

/// Removes every arm i with some j in `active` such that
/// μ_s(j) - 2^{-s} > μ_s(i) + 2^{-s}. `phase_means` is indexed by arm and holds
/// utilities. Never returns an empty set.
std::vector<ArmIndex> aae_eliminate(std::span<const ArmIndex> active,
                                    std::span<const double> phase_means, std::size_t phase);

struct AaeState {
  std::vector<ArmIndex> active;
  std::size_t phase = 1;
  std::size_t position = 0;              // index into `active` of the arm being sampled
  std::size_t feeds_this_arm = 0;        // losses received for that arm in this phase
  std::size_t buffered = 0;              // |R_{i,s}|, capped at the phase quota
  double buffered_utility_sum = 0.0;
  std::vector<double> phase_means;       // μ_s(i) of the last completed phase per arm
  std::vector<std::size_t> eliminated_in_phase;  // 0 while still active
};

class AaeAlgorithm final : public BanditAlgorithm {
 public:
  /// How many losses an active arm receives per phase.
  enum class PhaseLength {
    kObservationQuota,  // aae_phase_quota(s, T)
    kBbdaBlocks,        // aae_bbda_phase_blocks(s, T), mean over at most the quota
  };

  AaeAlgorithm(std::size_t num_arms, double horizon,
               PhaseLength rule = PhaseLength::kObservationQuota);

  const AaeState& state() const { return state_; }
  std::size_t phase_length(std::size_t phase) const;
  std::size_t num_arms() const override { return num_arms_; }
  std::string name() const override { return "aae"; }

 protected:
  ArmIndex do_select() override { return state_.active[state_.position]; }
  void do_feed(ArmIndex arm, double loss) override;
  void do_reset() override;

 private:
  std::size_t num_arms_;
  double horizon_;
  PhaseLength rule_;
  AaeState state_;
};

// -- EXP3 --------------------------------------------------------------------

/// Exponential weights kept in log space, shifted so the largest log-weight is 0
/// after every update. Shifting leaves the probabilities unchanged.
struct Exp3State {
  std::vector<double> log_weights;
  std::vector<double> probs;
  double eta = 0.0;

  Exp3State() = default;
  Exp3State(std::size_t num_arms, double eta);
  std::vector<double> weights() const;
};

/// Multiplies the pulled arm's weight by exp(-η ℓ̂) and renormalizes.
void exp3_update(Exp3State& state, ArmIndex arm, double estimated_loss);

/// Inverse-CDF draw from `probs` using u in [0, 1). Zero-probability arms are never returned.
ArmIndex sample_from(std::span<const double> probs, double u);

/// Standard EXP3 for deterministic feedback: ℓ̂ = ℓ / π on the pulled arm,
/// η = sqrt(ln K / (T K)).
class Exp3Algorithm final : public BanditAlgorithm {
 public:
  Exp3Algorithm(std::size_t num_arms, double horizon, const TapeSet& tapes,
                std::uint64_t replicate);

  const Exp3State& state() const { return state_; }
  std::size_t num_arms() const override { return state_.probs.size(); }
  std::string name() const override { return "exp3"; }

 protected:
  ArmIndex do_select() override;
  void do_feed(ArmIndex arm, double loss) override;
  void do_reset() override;

 private:
  double eta0_;
  const TapeSet* tapes_;
  std::uint64_t replicate_;
  Exp3State state_;
};

enum class BaseAlgorithm { kUcb, kAae, kExp3 };

std::string to_string(BaseAlgorithm base);
BaseAlgorithm base_algorithm_from_string(const std::string& name);

/// Factory used by the black-box transforms. `horizon` is the wrapped algorithm's horizon.
std::unique_ptr<BanditAlgorithm> make_base_algorithm(BaseAlgorithm base, std::size_t num_arms,
                                                     double horizon, const TapeSet& tapes,
                                                     std::uint64_t replicate);

}  // namespace pfb
