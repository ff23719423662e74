#include "pfb/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pfb {

ArmIndex BanditAlgorithm::select() {
  if (pending_) throw std::logic_error(name() + ": select() called twice without feed()");
  pending_arm_ = do_select();
  pending_ = true;
  return pending_arm_;
}

void BanditAlgorithm::feed(ArmIndex arm, double loss) {
  if (!pending_) throw std::logic_error(name() + ": feed() without a pending select()");
  if (arm != pending_arm_) throw std::logic_error(name() + ": feed() for an arm that was not selected");
  pending_ = false;
  ++fed_;
  do_feed(arm, loss);
}

void BanditAlgorithm::reset() {
  pending_ = false;
  fed_ = 0;
  do_reset();
}

// -- UCB ---------------------------------------------------------------------

UcbState::UcbState(std::size_t num_arms, double horizon_)
    : pulls(num_arms, 0), mean_utility(num_arms, 0.0), horizon(horizon_) {}

void UcbState::update(ArmIndex arm, double loss) {
  const double n = static_cast<double>(pulls[arm]);
  mean_utility[arm] = n * mean_utility[arm] / (n + 1.0) - loss / (n + 1.0);
  ++pulls[arm];
}

double ucb_index(double mean_utility, std::size_t pulls, double horizon) {
  if (pulls == 0) throw std::invalid_argument("ucb_index: pulls must be >= 1");
  return mean_utility + std::sqrt(6.0 * std::log(horizon) / static_cast<double>(pulls));
}

ArmIndex ucb_select(const UcbState& state) {
  const std::size_t k = state.pulls.size();
  for (ArmIndex i = 0; i < k; ++i)
    if (state.pulls[i] == 0) return i;
  ArmIndex best = 0;
  double best_index = -std::numeric_limits<double>::infinity();
  for (ArmIndex i = 0; i < k; ++i) {
    const double v = ucb_index(state.mean_utility[i], state.pulls[i], state.horizon);
    if (v > best_index) {
      best_index = v;
      best = i;
    }
  }
  return best;
}

UcbAlgorithm::UcbAlgorithm(std::size_t num_arms, double horizon) : state_(num_arms, horizon) {
  if (num_arms == 0) throw ValidationError("ucb: need at least one arm");
}

void UcbAlgorithm::do_reset() { state_ = UcbState(state_.pulls.size(), state_.horizon); }

// -- AAE ---------------------------------------------------------------------

std::size_t aae_phase_quota(std::size_t phase, double horizon) {
  const double threshold = 8.0 * std::log(horizon) * std::ldexp(1.0, static_cast<int>(2 * phase));
  return static_cast<std::size_t>(std::floor(threshold)) + 1;
}

std::size_t aae_bbda_phase_blocks(std::size_t phase, double horizon) {
  const double blocks = std::ldexp(1.0, static_cast<int>(2 * phase + 1)) * std::log(horizon);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(blocks)));
}

std::vector<ArmIndex> aae_eliminate(std::span<const ArmIndex> active,
                                    std::span<const double> phase_means, std::size_t phase) {
  if (active.size() <= 1) return {active.begin(), active.end()};
  const double radius = std::ldexp(1.0, -static_cast<int>(phase));
  double best_lcb = -std::numeric_limits<double>::infinity();
  for (ArmIndex j : active) best_lcb = std::max(best_lcb, phase_means[j] - radius);
  std::vector<ArmIndex> kept;
  for (ArmIndex i : active)
    if (!(best_lcb > phase_means[i] + radius)) kept.push_back(i);
  // Unreachable with finite means (the argmax arm always survives); kept for NaN inputs.
  if (kept.empty()) kept.assign(active.begin(), active.end());
  return kept;
}

AaeAlgorithm::AaeAlgorithm(std::size_t num_arms, double horizon, PhaseLength rule)
    : num_arms_(num_arms), horizon_(horizon), rule_(rule) {
  if (num_arms == 0) throw ValidationError("aae: need at least one arm");
  do_reset();
}

std::size_t AaeAlgorithm::phase_length(std::size_t phase) const {
  return rule_ == PhaseLength::kObservationQuota ? aae_phase_quota(phase, horizon_)
                                                 : aae_bbda_phase_blocks(phase, horizon_);
}

void AaeAlgorithm::do_reset() {
  state_ = AaeState{};
  state_.active.resize(num_arms_);
  for (ArmIndex i = 0; i < num_arms_; ++i) state_.active[i] = i;
  state_.phase_means.assign(num_arms_, 0.0);
  state_.eliminated_in_phase.assign(num_arms_, 0);
}

void AaeAlgorithm::do_feed(ArmIndex arm, double loss) {
  AaeState& s = state_;
  const std::size_t quota = aae_phase_quota(s.phase, horizon_);
  if (s.buffered < quota) {
    s.buffered_utility_sum -= loss;
    ++s.buffered;
  }
  if (++s.feeds_this_arm < phase_length(s.phase)) return;

  s.phase_means[arm] = s.buffered_utility_sum / static_cast<double>(s.buffered);
  s.feeds_this_arm = 0;
  s.buffered = 0;
  s.buffered_utility_sum = 0.0;
  if (++s.position < s.active.size()) return;

  std::vector<ArmIndex> kept = aae_eliminate(s.active, s.phase_means, s.phase);
  for (ArmIndex i : s.active)
    if (std::find(kept.begin(), kept.end(), i) == kept.end()) s.eliminated_in_phase[i] = s.phase;
  s.active = std::move(kept);
  s.position = 0;
  ++s.phase;
}

// -- EXP3 --------------------------------------------------------------------

Exp3State::Exp3State(std::size_t num_arms, double eta_)
    : log_weights(num_arms, 0.0),
      probs(num_arms, num_arms ? 1.0 / static_cast<double>(num_arms) : 0.0),
      eta(eta_) {}

std::vector<double> Exp3State::weights() const {
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i]);
  return w;
}

void exp3_update(Exp3State& state, ArmIndex arm, double estimated_loss) {
  if (!std::isfinite(estimated_loss)) throw std::invalid_argument("exp3_update: non-finite loss estimate");
  if (estimated_loss == 0.0) return;
  state.log_weights[arm] -= state.eta * estimated_loss;
  const double top = *std::max_element(state.log_weights.begin(), state.log_weights.end());
  double total = 0.0;
  for (std::size_t i = 0; i < state.log_weights.size(); ++i) {
    state.log_weights[i] -= top;
    state.probs[i] = std::exp(state.log_weights[i]);
    total += state.probs[i];
  }
  for (double& p : state.probs) p /= total;
}

ArmIndex sample_from(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  ArmIndex last_positive = 0;
  for (ArmIndex i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return last_positive;
}

namespace {
double standard_exp3_eta(std::size_t k, double horizon) {
  if (k < 2) return 0.0;
  return std::sqrt(std::log(static_cast<double>(k)) / (horizon * static_cast<double>(k)));
}
}  // namespace

Exp3Algorithm::Exp3Algorithm(std::size_t num_arms, double horizon, const TapeSet& tapes,
                             std::uint64_t replicate)
    : eta0_(standard_exp3_eta(num_arms, horizon)),
      tapes_(&tapes),
      replicate_(replicate),
      state_(num_arms, eta0_) {
  if (num_arms == 0) throw ValidationError("exp3: need at least one arm");
}

ArmIndex Exp3Algorithm::do_select() {
  return sample_from(state_.probs, tapes_->uniform(Stream::kAlgorithm, replicate_, 0, rounds_fed() + 1));
}

void Exp3Algorithm::do_feed(ArmIndex arm, double loss) {
  exp3_update(state_, arm, loss / state_.probs[arm]);
}

void Exp3Algorithm::do_reset() { state_ = Exp3State(state_.probs.size(), eta0_); }

std::string to_string(BaseAlgorithm base) {
  switch (base) {
    case BaseAlgorithm::kUcb: return "ucb";
    case BaseAlgorithm::kAae: return "aae";
    case BaseAlgorithm::kExp3: return "exp3";
  }
  return "unknown";
}

BaseAlgorithm base_algorithm_from_string(const std::string& name) {
  if (name == "ucb") return BaseAlgorithm::kUcb;
  if (name == "aae") return BaseAlgorithm::kAae;
  if (name == "exp3") return BaseAlgorithm::kExp3;
  throw ValidationError("unknown base algorithm '" + name + "'");
}

std::unique_ptr<BanditAlgorithm> make_base_algorithm(BaseAlgorithm base, std::size_t num_arms,
                                                     double horizon, const TapeSet& tapes,
                                                     std::uint64_t replicate) {
  switch (base) {
    case BaseAlgorithm::kUcb: return std::make_unique<UcbAlgorithm>(num_arms, horizon);
    case BaseAlgorithm::kAae: return std::make_unique<AaeAlgorithm>(num_arms, horizon);
    case BaseAlgorithm::kExp3: return std::make_unique<Exp3Algorithm>(num_arms, horizon, tapes, replicate);
  }
  throw ValidationError("unknown base algorithm");
}

}  // namespace pfb
