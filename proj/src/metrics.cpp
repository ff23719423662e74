#include "pfb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pfb {

ArmCounts compute_apc_foc(const RunTrace& trace, std::size_t num_arms) {
  ArmCounts c{std::vector<std::size_t>(num_arms, 0), std::vector<std::size_t>(num_arms, 0)};
  for (const RoundRecord& r : trace.rounds) {
    ++c.apc[r.arm];
    if (r.observed) ++c.foc[r.arm];
  }
  return c;
}

double pseudo_regret(const RunTrace& trace, const Instance& instance) {
  const std::size_t k = instance.num_arms();
  const std::size_t n = trace.size();
  if (!instance.has_adversarial_losses()) {
    double total = 0.0;
    for (const RoundRecord& r : trace.rounds) total += instance.gap(r.arm);
    return total;
  }
  auto loss_at = [&](ArmIndex i, std::size_t t) {
    const LossModel& m = instance.loss_model(i);
    if (const auto* a = std::get_if<AdversarialLoss>(&m)) return a->tape[t];
    return instance.mean_loss(i);
  };
  double incurred = 0.0;
  std::vector<double> fixed(k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    incurred += loss_at(trace.rounds[t].arm, t);
    for (ArmIndex i = 0; i < k; ++i) fixed[i] += loss_at(i, t);
  }
  return incurred - *std::min_element(fixed.begin(), fixed.end());
}

MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  if (xs.empty()) return out;
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

MeanSe paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_difference: length mismatch");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  return mean_se(d);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {
std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

ReplicateMetrics replicate_metrics(const RunTrace& trace, const Instance& instance) {
  const ArmCounts c = compute_apc_foc(trace, instance.num_arms());
  ReplicateMetrics m;
  m.apc.assign(c.apc.begin(), c.apc.end());
  m.foc.assign(c.foc.begin(), c.foc.end());
  m.regret = pseudo_regret(trace, instance);
  return m;
}

MetricsSummary summarize(std::span<const ReplicateMetrics> replicates) {
  MetricsSummary s;
  s.replicates = replicates.size();
  if (replicates.empty()) return s;
  const std::size_t k = replicates.front().apc.size();
  std::vector<double> column(replicates.size());
  auto fill = [&](auto getter) {
    for (std::size_t r = 0; r < replicates.size(); ++r) column[r] = getter(replicates[r]);
    return mean_se(column);
  };
  for (std::size_t i = 0; i < k; ++i) {
    const MeanSe apc = fill([i](const ReplicateMetrics& m) { return m.apc[i]; });
    const MeanSe foc = fill([i](const ReplicateMetrics& m) { return m.foc[i]; });
    s.apc_mean.push_back(apc.mean);
    s.apc_se.push_back(apc.se);
    s.foc_mean.push_back(foc.mean);
    s.foc_se.push_back(foc.se);
  }
  const MeanSe regret = fill([](const ReplicateMetrics& m) { return m.regret; });
  s.regret_mean = regret.mean;
  s.regret_se = regret.se;
  return s;
}

std::string to_string(Measure m) { return m == Measure::kApc ? "APC" : "FOC"; }

std::string to_string(MonotonicityLabel label) {
  switch (label) {
    case MonotonicityLabel::kPositive: return "positive";
    case MonotonicityLabel::kNegative: return "negative";
    case MonotonicityLabel::kBalanced: return "balanced";
    case MonotonicityLabel::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

MonotonicityVerdict classify_monotonicity(std::vector<GridEstimate> estimates, double tolerance,
                                          std::optional<std::vector<double>> difference_se,
                                          double sigmas) {
  MonotonicityVerdict v;
  v.sigmas = sigmas;
  const bool sorted = std::is_sorted(estimates.begin(), estimates.end(),
                                     [](const GridEstimate& a, const GridEstimate& b) { return a.f < b.f; });
  if (difference_se && !sorted)
    throw std::invalid_argument("classify_monotonicity: paired SEs require estimates sorted by f");
  std::stable_sort(estimates.begin(), estimates.end(),
                   [](const GridEstimate& a, const GridEstimate& b) { return a.f < b.f; });
  v.estimates = std::move(estimates);
  const std::size_t pairs = v.estimates.size() < 2 ? 0 : v.estimates.size() - 1;
  if (pairs == 0) return v;
  if (difference_se) {
    if (difference_se->size() != pairs)
      throw std::invalid_argument("classify_monotonicity: need one difference SE per adjacent pair");
    v.difference_se = *difference_se;
  } else {
    for (std::size_t i = 0; i < pairs; ++i)
      v.difference_se.push_back(std::hypot(v.estimates[i].se, v.estimates[i + 1].se));
  }

  bool positive = true, negative = true, balanced = true;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double d = v.estimates[i + 1].mean - v.estimates[i].mean;
    const double band = sigmas * v.difference_se[i];
    positive = positive && d - band > 0.0;
    negative = negative && d + band < 0.0;
    balanced = balanced && std::abs(d) <= tolerance + band;
  }
  if (positive) v.label = MonotonicityLabel::kPositive;
  else if (negative) v.label = MonotonicityLabel::kNegative;
  else if (balanced) v.label = MonotonicityLabel::kBalanced;
  return v;
}

}  // namespace pfb
