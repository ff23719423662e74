#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "pfb/algorithms.hpp"
#include "pfb/core.hpp"

namespace pfb::testing {

/// Chooses arms from a fixed cyclic script and records every loss it is fed.
class ScriptedAlgorithm final : public BanditAlgorithm {
 public:
  ScriptedAlgorithm(std::size_t num_arms, std::vector<ArmIndex> script)
      : num_arms_(num_arms), script_(std::move(script)) {}

  std::vector<ArmIndex> chosen;
  std::vector<double> fed;

  std::size_t num_arms() const override { return num_arms_; }
  std::string name() const override { return "scripted"; }

 protected:
  ArmIndex do_select() override {
    const ArmIndex a = script_[chosen.size() % script_.size()];
    chosen.push_back(a);
    return a;
  }
  void do_feed(ArmIndex, double loss) override { fed.push_back(loss); }
  void do_reset() override {
    chosen.clear();
    fed.clear();
  }

 private:
  std::size_t num_arms_;
  std::vector<ArmIndex> script_;
};

inline Instance gaussian_instance(std::size_t horizon, std::vector<double> f, std::vector<double> means,
                                  double sd = 0.1) {
  InstanceSpec spec{horizon, std::move(f), {}};
  for (double m : means) spec.loss_models.push_back(GaussianLoss{m, sd});
  return make_instance(std::move(spec));
}

inline bool same_trace(const RunTrace& a, const RunTrace& b) {
  if (a.size() != b.size() || a.feeds != b.feeds || a.stalled != b.stalled) return false;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const RoundRecord& x = a.rounds[t];
    const RoundRecord& y = b.rounds[t];
    if (x.arm != y.arm || x.observed != y.observed || x.loss != y.loss) return false;
  }
  return true;
}

/// Lengths of maximal runs of the same arm.
inline std::vector<std::size_t> run_lengths(const RunTrace& trace) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (t == 0 || trace.rounds[t].arm != trace.rounds[t - 1].arm) out.push_back(0);
    ++out.back();
  }
  return out;
}

}  // namespace pfb::testing
