#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace pfb {

using ArmIndex = std::size_t;
using Round = std::size_t;  // 1-based round index t ∈ [1, T]

/// Thrown when an instance, loss model or configuration violates its contract.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// -- Loss models -------------------------------------------------------------

struct ConstantLoss {
  double value = 0.0;
};

/// Gaussian draw mean + stddev * z, clipped (not resampled) to [clip_low, clip_high].
struct GaussianLoss {
  double mean = 0.0;
  double stddev = 0.1;
  double clip_low = 0.0;
  double clip_high = 1.0;
};

/// Loss 1 with probability `mean`, otherwise 0.
struct BernoulliLoss {
  double mean = 0.5;
};

/// Oblivious adversarial sequence; tape[t - 1] is the loss at round t.
struct AdversarialLoss {
  std::vector<double> tape;
};

using LossModel = std::variant<ConstantLoss, GaussianLoss, BernoulliLoss, AdversarialLoss>;

bool is_adversarial(const LossModel& model);

/// Expected loss of one draw. For adversarial tapes this is the tape average.
double expected_loss(const LossModel& model);

std::string describe(const LossModel& model);

// -- Instances ---------------------------------------------------------------

struct InstanceSpec {
  std::size_t horizon = 0;
  std::vector<double> feedback_probs;
  std::vector<LossModel> loss_models;
};

/// A validated problem instance. Immutable once built.
class Instance {
 public:
  explicit Instance(InstanceSpec spec);

  std::size_t num_arms() const { return spec_.feedback_probs.size(); }
  std::size_t horizon() const { return spec_.horizon; }
  double feedback_prob(ArmIndex arm) const { return spec_.feedback_probs[arm]; }
  std::span<const double> feedback_probs() const { return spec_.feedback_probs; }
  const LossModel& loss_model(ArmIndex arm) const { return spec_.loss_models[arm]; }
  const InstanceSpec& spec() const { return spec_; }

  double mean_loss(ArmIndex arm) const { return means_[arm]; }
  /// Δ_i = mean_i - min_j mean_j.
  double gap(ArmIndex arm) const { return means_[arm] - best_mean_; }
  std::vector<double> gaps() const;
  ArmIndex best_arm() const { return best_arm_; }
  bool has_adversarial_losses() const { return any_adversarial_; }

  /// Copy of this instance with one arm's feedback probability replaced.
  Instance with_feedback_prob(ArmIndex arm, double f) const;
  Instance with_feedback_probs(std::vector<double> f) const;
  Instance with_horizon(std::size_t horizon) const;

 private:
  InstanceSpec spec_;
  std::vector<double> means_;
  double best_mean_ = 0.0;
  ArmIndex best_arm_ = 0;
  bool any_adversarial_ = false;
};

Instance make_instance(InstanceSpec spec);

// -- Randomness tapes --------------------------------------------------------

/// Disjoint stream families. Every consumer of randomness owns one, so that
/// changing a single feedback probability leaves all other draws untouched.
enum class Stream : std::uint64_t {
  kFeedback = 1,
  kLossNoise = 2,
  kBlockPick = 3,
  kRemainderArm = 4,
  kAlgorithm = 5,
  kGeometric = 6,
  kGenerator = 7,
  kBlockObserved = 8,
};

/// Counter-based uniform source keyed by (seed, stream, replicate, arm, index, lane).
/// Pure function of its key: no state, safe to share across threads.
class TapeSet {
 public:
  explicit TapeSet(std::uint64_t master_seed) : seed_(master_seed) {}

  std::uint64_t master_seed() const { return seed_; }

  std::uint64_t bits(Stream stream, std::uint64_t replicate, std::uint64_t arm,
                     std::uint64_t index, std::uint64_t lane = 0) const;

  /// Uniform in [0, 1).
  double uniform(Stream stream, std::uint64_t replicate, std::uint64_t arm, std::uint64_t index,
                 std::uint64_t lane = 0) const;

  /// Uniform in the open interval (0, 1).
  double open_uniform(Stream stream, std::uint64_t replicate, std::uint64_t arm,
                      std::uint64_t index, std::uint64_t lane = 0) const;

  /// Feedback uniform for arm pulled at round t; X_{i,t} = 1{u < f_i}.
  double feedback_uniform(std::uint64_t replicate, ArmIndex arm, Round t) const {
    return uniform(Stream::kFeedback, replicate, arm, t);
  }

 private:
  std::uint64_t seed_;
};

std::uint64_t mix64(std::uint64_t x);

/// Seed for replicate r under a master seed; also used to derive sub-seeds.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// X = 1{u < f}. Monotone non-decreasing in f for fixed u.
inline bool draw_feedback(double u, double f) { return u < f; }

/// Inverse-CDF geometric on {1, 2, ...}: ceil(ln(1-u) / ln(1-f)); 1 when f = 1.
/// Monotone non-increasing in f for fixed u.
std::size_t geometric_from_uniform(double u, double f);

/// Realized loss of `arm` at round t in the given replicate. Always in [0, 1]
/// for validated models.
double sample_loss(const LossModel& model, ArmIndex arm, Round t, const TapeSet& tapes,
                   std::uint64_t replicate);

inline double sample_loss(const Instance& instance, ArmIndex arm, Round t, const TapeSet& tapes,
                          std::uint64_t replicate) {
  return sample_loss(instance.loss_model(arm), arm, t, tapes, replicate);
}

// -- Traces ------------------------------------------------------------------

struct RoundRecord {
  ArmIndex arm = 0;
  bool observed = false;
  double loss = 0.0;  // meaningful only when observed

  std::optional<double> observed_loss() const {
    return observed ? std::optional<double>(loss) : std::nullopt;
  }
};

/// Per-round record of one run. Round t is rounds[t - 1].
struct RunTrace {
  std::size_t horizon = 0;
  std::vector<RoundRecord> rounds;
  std::size_t feeds = 0;     // losses handed to a wrapped algorithm
  bool stalled = false;      // a zero-probability arm absorbed the remaining rounds

  void reserve(std::size_t n) { rounds.reserve(n); }
  void record(ArmIndex arm, bool observed, double loss) {
    rounds.push_back({arm, observed, observed ? loss : 0.0});
  }
  std::size_t size() const { return rounds.size(); }
  bool complete() const { return rounds.size() == horizon; }
  bool full() const { return rounds.size() >= horizon; }
};

}  // namespace pfb
