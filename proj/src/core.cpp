#include "pfb/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace pfb {
namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

// E[min(max(X, lo), hi)] for X ~ N(mean, sd^2).
double clipped_gaussian_mean(const GaussianLoss& g) {
  if (g.stddev == 0.0) return std::clamp(g.mean, g.clip_low, g.clip_high);
  const double a = (g.clip_low - g.mean) / g.stddev;
  const double b = (g.clip_high - g.mean) / g.stddev;
  const double pa = normal_cdf(a);
  const double pb = normal_cdf(b);
  return g.clip_low * pa + g.clip_high * (1.0 - pb) + g.mean * (pb - pa) +
         g.stddev * (normal_pdf(a) - normal_pdf(b));
}

void validate_model(const LossModel& model, std::size_t arm, std::size_t horizon) {
  const std::string where = "loss_models[" + std::to_string(arm) + "]";
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantLoss>) {
          if (!in_unit(m.value)) throw ValidationError(where + ": constant value outside [0,1]");
        } else if constexpr (std::is_same_v<M, GaussianLoss>) {
          if (!(m.stddev >= 0.0) || !std::isfinite(m.stddev))
            throw ValidationError(where + ": stddev must be finite and >= 0");
          if (!std::isfinite(m.mean)) throw ValidationError(where + ": mean must be finite");
          if (!in_unit(m.clip_low) || !in_unit(m.clip_high) || m.clip_low > m.clip_high)
            throw ValidationError(where + ": clip bounds must satisfy 0 <= low <= high <= 1");
        } else if constexpr (std::is_same_v<M, BernoulliLoss>) {
          if (!in_unit(m.mean)) throw ValidationError(where + ": bernoulli mean outside [0,1]");
        } else {
          if (m.tape.size() != horizon)
            throw ValidationError(where + ": adversarial tape length " +
                                  std::to_string(m.tape.size()) + " != horizon " +
                                  std::to_string(horizon));
          for (double v : m.tape)
            if (!in_unit(v)) throw ValidationError(where + ": adversarial tape entry outside [0,1]");
        }
      },
      model);
}

}  // namespace

bool is_adversarial(const LossModel& model) {
  return std::holds_alternative<AdversarialLoss>(model);
}

double expected_loss(const LossModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantLoss>) {
          return m.value;
        } else if constexpr (std::is_same_v<M, GaussianLoss>) {
          return clipped_gaussian_mean(m);
        } else if constexpr (std::is_same_v<M, BernoulliLoss>) {
          return m.mean;
        } else {
          if (m.tape.empty()) return 0.0;
          return std::accumulate(m.tape.begin(), m.tape.end(), 0.0) /
                 static_cast<double>(m.tape.size());
        }
      },
      model);
}

std::string describe(const LossModel& model) {
  std::ostringstream os;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantLoss>) {
          os << "constant(" << m.value << ")";
        } else if constexpr (std::is_same_v<M, GaussianLoss>) {
          os << "gaussian(" << m.mean << "," << m.stddev << ",[" << m.clip_low << ","
             << m.clip_high << "])";
        } else if constexpr (std::is_same_v<M, BernoulliLoss>) {
          os << "bernoulli(" << m.mean << ")";
        } else {
          os << "adversarial(len=" << m.tape.size() << ")";
        }
      },
      model);
  return os.str();
}

Instance::Instance(InstanceSpec spec) : spec_(std::move(spec)) {
  const std::size_t k = spec_.feedback_probs.size();
  if (k == 0) throw ValidationError("instance: arm list is empty");
  if (spec_.loss_models.size() != k)
    throw ValidationError("instance: feedback_probs has " + std::to_string(k) +
                          " entries but loss_models has " +
                          std::to_string(spec_.loss_models.size()));
  if (spec_.horizon == 0) throw ValidationError("instance: horizon must be >= 1");
  for (std::size_t i = 0; i < k; ++i) {
    const double f = spec_.feedback_probs[i];
    if (!in_unit(f))
      throw ValidationError("instance: feedback_probs[" + std::to_string(i) +
                            "] = " + std::to_string(f) + " outside [0,1]");
    validate_model(spec_.loss_models[i], i, spec_.horizon);
  }
  means_.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    means_[i] = expected_loss(spec_.loss_models[i]);
    any_adversarial_ = any_adversarial_ || is_adversarial(spec_.loss_models[i]);
  }
  best_arm_ = static_cast<ArmIndex>(std::min_element(means_.begin(), means_.end()) - means_.begin());
  best_mean_ = means_[best_arm_];
}

std::vector<double> Instance::gaps() const {
  std::vector<double> out(means_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gap(i);
  return out;
}

Instance Instance::with_feedback_prob(ArmIndex arm, double f) const {
  if (arm >= num_arms()) throw ValidationError("instance: arm index out of range");
  InstanceSpec s = spec_;
  s.feedback_probs[arm] = f;
  return Instance(std::move(s));
}

Instance Instance::with_feedback_probs(std::vector<double> f) const {
  InstanceSpec s = spec_;
  s.feedback_probs = std::move(f);
  return Instance(std::move(s));
}

Instance Instance::with_horizon(std::size_t horizon) const {
  InstanceSpec s = spec_;
  s.horizon = horizon;
  return Instance(std::move(s));
}

Instance make_instance(InstanceSpec spec) { return Instance(std::move(spec)); }

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return mix64(mix64(master_seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

std::uint64_t TapeSet::bits(Stream stream, std::uint64_t replicate, std::uint64_t arm,
                            std::uint64_t index, std::uint64_t lane) const {
  std::uint64_t h = mix64(seed_ ^ (static_cast<std::uint64_t>(stream) << 56));
  h = mix64(h ^ replicate);
  h = mix64(h ^ (arm * 0x9e3779b97f4a7c15ULL));
  h = mix64(h ^ index);
  return mix64(h ^ (lane + 0x632be59bd9b4e019ULL));
}

double TapeSet::uniform(Stream stream, std::uint64_t replicate, std::uint64_t arm,
                        std::uint64_t index, std::uint64_t lane) const {
  return static_cast<double>(bits(stream, replicate, arm, index, lane) >> 11) * 0x1.0p-53;
}

double TapeSet::open_uniform(Stream stream, std::uint64_t replicate, std::uint64_t arm,
                             std::uint64_t index, std::uint64_t lane) const {
  return (static_cast<double>(bits(stream, replicate, arm, index, lane) >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t geometric_from_uniform(double u, double f) {
  if (!(f > 0.0) || f > 1.0) throw ValidationError("geometric_from_uniform: f must lie in (0,1]");
  if (!(u > 0.0 && u < 1.0)) throw ValidationError("geometric_from_uniform: u must lie in (0,1)");
  if (f == 1.0) return 1;
  const double q = std::ceil(std::log1p(-u) / std::log1p(-f));
  if (q < 1.0) return 1;
  if (q > 1e18) return static_cast<std::size_t>(1e18);
  return static_cast<std::size_t>(q);
}

double sample_loss(const LossModel& model, ArmIndex arm, Round t, const TapeSet& tapes,
                   std::uint64_t replicate) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantLoss>) {
          return m.value;
        } else if constexpr (std::is_same_v<M, GaussianLoss>) {
          // Box-Muller on two keyed uniforms.
          const double u1 = tapes.open_uniform(Stream::kLossNoise, replicate, arm, t, 0);
          const double u2 = tapes.uniform(Stream::kLossNoise, replicate, arm, t, 1);
          const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
          return std::clamp(m.mean + m.stddev * z, m.clip_low, m.clip_high);
        } else if constexpr (std::is_same_v<M, BernoulliLoss>) {
          return tapes.uniform(Stream::kLossNoise, replicate, arm, t, 0) < m.mean ? 1.0 : 0.0;
        } else {
          return m.tape[t - 1];
        }
      },
      model);
}

}  // namespace pfb
