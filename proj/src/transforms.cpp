#include "pfb/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pfb {
namespace {

// Plays rounds in order, appending to the trace. Round t is trace.size() + 1.
class Player {
 public:
  Player(const Instance& instance, const TapeSet& tapes, std::uint64_t replicate, RunTrace& trace)
      : instance_(instance), tapes_(tapes), replicate_(replicate), trace_(trace) {}

  bool done() const { return trace_.full(); }
  std::size_t remaining() const { return trace_.horizon - trace_.size(); }
  Round next_round() const { return trace_.size() + 1; }

  /// Pulls `arm` at the next round; returns whether its loss was observed.
  bool pull(ArmIndex arm, double& loss) {
    const Round t = next_round();
    const bool observed =
        draw_feedback(tapes_.feedback_uniform(replicate_, arm, t), instance_.feedback_prob(arm));
    loss = observed ? sample_loss(instance_, arm, t, tapes_, replicate_) : 0.0;
    trace_.record(arm, observed, loss);
    return observed;
  }

  /// Pulls `arm` for up to `len` rounds; returns the observed losses.
  std::size_t pull_block(ArmIndex arm, std::size_t len, std::vector<double>& observed) {
    observed.clear();
    const std::size_t n = std::min(len, remaining());
    double loss = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (pull(arm, loss)) observed.push_back(loss);
    return n;
  }

  /// Uniform-at-random pick among a block's observations, or loss 1 when there are none.
  double block_loss(const std::vector<double>& observed, std::size_t block) const {
    if (observed.empty()) return 1.0;
    const double u = tapes_.uniform(Stream::kBlockPick, replicate_, 0, block);
    const auto idx = std::min(observed.size() - 1,
                              static_cast<std::size_t>(u * static_cast<double>(observed.size())));
    return observed[idx];
  }

  void mark_stall_if(ArmIndex arm) {
    if (instance_.feedback_prob(arm) == 0.0 && done()) trace_.stalled = true;
  }

 private:
  const Instance& instance_;
  const TapeSet& tapes_;
  std::uint64_t replicate_;
  RunTrace& trace_;
};

RunTrace empty_trace(const Instance& instance) {
  RunTrace trace;
  trace.horizon = instance.horizon();
  trace.reserve(instance.horizon());
  return trace;
}

double log_horizon_arg(std::size_t horizon) { return static_cast<double>(std::max<std::size_t>(horizon, 2)); }

}  // namespace

std::size_t bbdivide_block_size(double horizon, double f_star) {
  if (!(f_star > 0.0) || f_star > 1.0) throw ValidationError("f_star must lie in (0,1]");
  return static_cast<std::size_t>(std::ceil(3.0 * std::log(horizon) / f_star));
}

std::size_t bbda_block_size(double horizon, double f_star, double f_arm) {
  if (!(f_star > 0.0) || f_star > 1.0) throw ValidationError("f_star must lie in (0,1]");
  return static_cast<std::size_t>(std::ceil(3.0 * std::log(horizon) / f_star * (1.0 + f_arm)));
}

double wrapped_divide_horizon(std::size_t horizon, double f_star) {
  const std::size_t b = bbdivide_block_size(log_horizon_arg(horizon), f_star);
  return static_cast<double>(std::max<std::size_t>(2, horizon / std::max<std::size_t>(b, 1)));
}

void validate_f_star(const Instance& instance, double f_star) {
  if (!(f_star > 0.0) || f_star > 1.0) throw ValidationError("f_star must lie in (0,1]");
  const auto f = instance.feedback_probs();
  const double min_f = *std::min_element(f.begin(), f.end());
  if (f_star > min_f)
    throw ValidationError("f_star = " + std::to_string(f_star) +
                          " exceeds min_i f_i = " + std::to_string(min_f));
}

RunTrace bb_divide_run(BanditAlgorithm& wrapped, const Instance& instance, double f_star,
                       const TapeSet& tapes, std::uint64_t replicate) {
  RunTrace trace = empty_trace(instance);
  Player player(instance, tapes, replicate, trace);
  const std::size_t T = instance.horizon();
  const std::size_t block = bbdivide_block_size(log_horizon_arg(T), f_star);
  const std::size_t blocks = T / block;
  std::vector<double> observed;
  for (std::size_t phi = 1; phi <= blocks; ++phi) {
    const ArmIndex arm = wrapped.select();
    player.pull_block(arm, block, observed);
    wrapped.feed(arm, player.block_loss(observed, phi));
    ++trace.feeds;
  }
  const std::size_t k = instance.num_arms();
  double loss = 0.0;
  while (!player.done()) {
    const double u = tapes.uniform(Stream::kRemainderArm, replicate, 0, player.next_round());
    player.pull(std::min(k - 1, static_cast<ArmIndex>(u * static_cast<double>(k))), loss);
  }
  return trace;
}

RunTrace bb_pull_run(BanditAlgorithm& wrapped, const Instance& instance, const TapeSet& tapes,
                     std::uint64_t replicate) {
  RunTrace trace = empty_trace(instance);
  Player player(instance, tapes, replicate, trace);
  double loss = 0.0;
  while (!player.done()) {
    const ArmIndex arm = wrapped.select();
    bool observed = false;
    while (!player.done() && !(observed = player.pull(arm, loss))) {
    }
    if (observed) {
      wrapped.feed(arm, loss);
      ++trace.feeds;
    } else {
      player.mark_stall_if(arm);
    }
  }
  return trace;
}

RunTrace bb_da_run(BanditAlgorithm& wrapped, const Instance& instance, double f_star,
                   const TapeSet& tapes, std::uint64_t replicate) {
  RunTrace trace = empty_trace(instance);
  Player player(instance, tapes, replicate, trace);
  const double log_arg = log_horizon_arg(instance.horizon());
  std::vector<std::size_t> block_size(instance.num_arms());
  for (ArmIndex i = 0; i < block_size.size(); ++i)
    block_size[i] = bbda_block_size(log_arg, f_star, instance.feedback_prob(i));
  std::vector<double> observed;
  for (std::size_t phi = 1; !player.done(); ++phi) {
    const ArmIndex arm = wrapped.select();
    if (player.pull_block(arm, block_size[arm], observed) < block_size[arm]) break;
    wrapped.feed(arm, player.block_loss(observed, phi));
    ++trace.feeds;
  }
  return trace;
}

RunTrace simulated_bb_pull_run(BanditAlgorithm& wrapped, const Instance& instance,
                               const TapeSet& tapes, std::uint64_t replicate) {
  RunTrace trace = empty_trace(instance);
  for (std::size_t phi = 1; !trace.full(); ++phi) {
    const ArmIndex arm = wrapped.select();
    const double f = instance.feedback_prob(arm);
    const std::size_t remaining = trace.horizon - trace.size();
    std::size_t q = remaining + 1;
    if (f > 0.0) q = geometric_from_uniform(tapes.open_uniform(Stream::kGeometric, replicate, arm, phi), f);
    const std::size_t n = std::min(q, remaining);
    for (std::size_t k = 1; k < n; ++k) trace.record(arm, false, 0.0);
    if (n < q) {
      trace.record(arm, false, 0.0);
      if (f == 0.0) trace.stalled = true;
      break;
    }
    const Round t_end = trace.size() + 1;
    const double loss = sample_loss(instance, arm, t_end, tapes, replicate);
    trace.record(arm, true, loss);
    wrapped.feed(arm, loss);
    ++trace.feeds;
  }
  return trace;
}

RunTrace bbpull_ucb_run(const Instance& instance, const TapeSet& tapes, std::uint64_t replicate) {
  RunTrace trace = empty_trace(instance);
  Player player(instance, tapes, replicate, trace);
  UcbState state(instance.num_arms(), log_horizon_arg(instance.horizon()));
  double loss = 0.0;
  while (!player.done()) {
    const ArmIndex arm = ucb_select(state);
    if (player.pull(arm, loss)) {
      state.update(arm, loss);
      ++trace.feeds;
    } else {
      player.mark_stall_if(arm);
    }
  }
  return trace;
}

RunTrace bbpull_aae_run(const Instance& instance, const TapeSet& tapes, std::uint64_t replicate) {
  RunTrace trace = empty_trace(instance);
  Player player(instance, tapes, replicate, trace);
  const double log_arg = log_horizon_arg(instance.horizon());
  std::vector<ArmIndex> active(instance.num_arms());
  std::iota(active.begin(), active.end(), ArmIndex{0});
  std::vector<double> means(instance.num_arms(), 0.0);
  double loss = 0.0;
  for (std::size_t s = 1; !player.done(); ++s) {
    const std::size_t quota = aae_phase_quota(s, log_arg);
    for (ArmIndex i : active) {
      std::size_t count = 0;
      double utility_sum = 0.0;
      while (count < quota && !player.done()) {
        if (player.pull(i, loss)) {
          utility_sum -= loss;
          ++count;
          ++trace.feeds;
        }
      }
      if (count < quota) {
        player.mark_stall_if(i);
        return trace;
      }
      means[i] = utility_sum / static_cast<double>(count);
    }
    active = aae_eliminate(active, means, s);
  }
  return trace;
}

RunTrace bbda_aae_run(const Instance& instance, double f_star, const TapeSet& tapes,
                      std::uint64_t replicate) {
  RunTrace trace = empty_trace(instance);
  Player player(instance, tapes, replicate, trace);
  const double log_arg = log_horizon_arg(instance.horizon());
  std::vector<std::size_t> block_size(instance.num_arms());
  for (ArmIndex i = 0; i < block_size.size(); ++i)
    block_size[i] = bbda_block_size(log_arg, f_star, instance.feedback_prob(i));
  std::vector<ArmIndex> active(instance.num_arms());
  std::iota(active.begin(), active.end(), ArmIndex{0});
  std::vector<double> means(instance.num_arms(), 0.0);
  std::vector<double> observed;
  std::size_t phi = 0;
  for (std::size_t s = 1; !player.done(); ++s) {
    const std::size_t quota = aae_phase_quota(s, log_arg);
    const std::size_t blocks = aae_bbda_phase_blocks(s, log_arg);
    for (ArmIndex i : active) {
      std::size_t count = 0;
      double utility_sum = 0.0;
      for (std::size_t b = 0; b < blocks; ++b) {
        ++phi;
        if (player.pull_block(i, block_size[i], observed) < block_size[i]) return trace;
        const double fed = player.block_loss(observed, phi);
        ++trace.feeds;
        if (count < quota) {
          utility_sum -= fed;
          ++count;
        }
      }
      means[i] = utility_sum / static_cast<double>(count);
    }
    active = aae_eliminate(active, means, s);
  }
  return trace;
}

double exp3_loss_estimator(double loss, bool observed, double pi, double p_e) {
  if (!observed) return 0.0;
  return loss / pi * p_e;
}

double exp3_learning_rate(std::size_t num_arms, double horizon, double p_lr_sum) {
  return std::sqrt(std::log(static_cast<double>(num_arms)) / (horizon * p_lr_sum));
}

std::size_t three_phase_observation_target(std::size_t horizon, std::size_t num_arms) {
  return static_cast<std::size_t>(
      std::ceil(8.0 * std::log(static_cast<double>(horizon) * static_cast<double>(num_arms))));
}

ThreePhaseRun three_phase_exp3_run(const Instance& instance, const TapeSet& tapes,
                                   std::uint64_t replicate, bool simplified) {
  const std::size_t k = instance.num_arms();
  for (ArmIndex i = 0; i < k; ++i)
    if (!(instance.feedback_prob(i) > 0.0))
      throw ValidationError("three_phase_exp3: feedback_probs[" + std::to_string(i) +
                            "] = 0; every arm needs f > 0");
  ThreePhaseRun out;
  out.trace = empty_trace(instance);
  out.p_lr.assign(k, 0.0);
  out.p_e.assign(k, 0.0);
  Player player(instance, tapes, replicate, out.trace);
  double loss = 0.0;

  if (simplified) {
    for (ArmIndex i = 0; i < k; ++i) out.p_lr[i] = out.p_e[i] = 1.0 / instance.feedback_prob(i);
  } else {
    const std::size_t target = three_phase_observation_target(instance.horizon(), k);
    for (ArmIndex i = 0; i < k; ++i) {
      std::size_t rounds = 0;
      std::size_t seen = 0;
      while (seen < target && !player.done()) {
        ++rounds;
        seen += player.pull(i, loss) ? 1 : 0;
      }
      if (seen < target) return out;
      out.p_lr[i] = static_cast<double>(rounds) / static_cast<double>(target);
    }
    for (ArmIndex i = 0; i < k; ++i) {
      std::size_t rounds = 0;
      bool seen = false;
      while (!seen && !player.done()) {
        ++rounds;
        seen = player.pull(i, loss);
      }
      if (!seen) return out;
      out.p_e[i] = static_cast<double>(rounds);
    }
  }

  out.phase3_start = player.next_round();
  const double p_lr_sum = std::accumulate(out.p_lr.begin(), out.p_lr.end(), 0.0);
  out.eta = exp3_learning_rate(k, static_cast<double>(instance.horizon()), p_lr_sum);
  Exp3State state(k, out.eta);
  while (!player.done()) {
    const Round t = player.next_round();
    const ArmIndex arm = sample_from(state.probs, tapes.uniform(Stream::kAlgorithm, replicate, 0, t));
    const bool observed = player.pull(arm, loss);
    exp3_update(state, arm, exp3_loss_estimator(loss, observed, state.probs[arm], out.p_e[arm]));
  }
  out.final_state = std::move(state);
  return out;
}

RunTrace exp3_naive_run(const Instance& instance, const TapeSet& tapes, std::uint64_t replicate) {
  RunTrace trace = empty_trace(instance);
  Player player(instance, tapes, replicate, trace);
  const std::size_t k = instance.num_arms();
  const double eta = k < 2 ? 0.0
                           : std::sqrt(std::log(static_cast<double>(k)) /
                                       (static_cast<double>(instance.horizon()) * static_cast<double>(k)));
  Exp3State state(k, eta);
  double loss = 0.0;
  while (!player.done()) {
    const Round t = player.next_round();
    const ArmIndex arm = sample_from(state.probs, tapes.uniform(Stream::kAlgorithm, replicate, 0, t));
    if (player.pull(arm, loss)) exp3_update(state, arm, -(1.0 - loss) / state.probs[arm]);
  }
  return trace;
}

// -- Dispatch ------------------------------------------------------------------

const std::vector<std::string>& algorithm_ids() {
  static const std::vector<std::string> ids = {
      "bbdivide_ucb",        "bbdivide_aae",
      "bbdivide_exp3",       "bbpull_ucb",
      "bbpull_aae",          "bbpull_exp3",
      "bbda_ucb",            "bbda_aae",
      "bbda_exp3",           "three_phase_exp3",
      "three_phase_exp3_simplified", "exp3_naive",
      "simulated_bbpull_ucb", "simulated_bbpull_aae",
  };
  return ids;
}

namespace {
bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }
}  // namespace

bool requires_f_star(const std::string& id) {
  return starts_with(id, "bbdivide_") || starts_with(id, "bbda_");
}

bool requires_stochastic_losses(const std::string& id) {
  return starts_with(id, "bbpull_") || starts_with(id, "simulated_") || id == "bbda_aae";
}

void validate_algorithm(const AlgorithmSpec& spec, const Instance& instance) {
  const auto& ids = algorithm_ids();
  if (std::find(ids.begin(), ids.end(), spec.id) == ids.end())
    throw ValidationError("algorithm.id: unknown algorithm '" + spec.id + "'");
  if (requires_f_star(spec.id)) {
    if (!spec.f_star) throw ValidationError("algorithm.f_star: required by '" + spec.id + "'");
    validate_f_star(instance, *spec.f_star);
  }
  if (requires_stochastic_losses(spec.id) && instance.has_adversarial_losses())
    throw ValidationError("algorithm.id: '" + spec.id + "' requires stochastic losses");
  if (starts_with(spec.id, "three_phase"))
    for (double f : instance.feedback_probs())
      if (!(f > 0.0)) throw ValidationError("instance.feedback_probs: '" + spec.id + "' needs every f > 0");
}

RunTrace run_algorithm(const AlgorithmSpec& spec, const Instance& instance, const TapeSet& tapes,
                       std::uint64_t replicate) {
  const std::string& id = spec.id;
  const std::size_t k = instance.num_arms();
  const std::size_t T = instance.horizon();
  if (id == "bbpull_ucb") return bbpull_ucb_run(instance, tapes, replicate);
  if (id == "bbpull_aae") return bbpull_aae_run(instance, tapes, replicate);
  if (id == "bbda_aae") return bbda_aae_run(instance, spec.f_star.value(), tapes, replicate);
  if (id == "three_phase_exp3") return three_phase_exp3_run(instance, tapes, replicate, false).trace;
  if (id == "three_phase_exp3_simplified") return three_phase_exp3_run(instance, tapes, replicate, true).trace;
  if (id == "exp3_naive") return exp3_naive_run(instance, tapes, replicate);

  const auto underscore = id.rfind('_');
  if (underscore == std::string::npos) throw ValidationError("algorithm.id: unknown algorithm '" + id + "'");
  const std::string transform = id.substr(0, underscore);
  const BaseAlgorithm base = base_algorithm_from_string(id.substr(underscore + 1));
  if (transform == "bbdivide") {
    const double f_star = spec.f_star.value();
    auto alg = make_base_algorithm(base, k, wrapped_divide_horizon(T, f_star), tapes, replicate);
    return bb_divide_run(*alg, instance, f_star, tapes, replicate);
  }
  if (transform == "bbda") {
    const double f_star = spec.f_star.value();
    auto alg = make_base_algorithm(base, k, wrapped_divide_horizon(T, f_star), tapes, replicate);
    return bb_da_run(*alg, instance, f_star, tapes, replicate);
  }
  if (transform == "bbpull") {
    auto alg = make_base_algorithm(base, k, log_horizon_arg(T), tapes, replicate);
    return bb_pull_run(*alg, instance, tapes, replicate);
  }
  if (transform == "simulated_bbpull") {
    auto alg = make_base_algorithm(base, k, log_horizon_arg(T), tapes, replicate);
    return simulated_bb_pull_run(*alg, instance, tapes, replicate);
  }
  throw ValidationError("algorithm.id: unknown algorithm '" + id + "'");
}

}  // namespace pfb
