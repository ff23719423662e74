#include "pfb/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pfb {

std::size_t resolve_jobs(std::size_t jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

ReplicateBatch replicate_run(const AlgorithmSpec& algorithm, const Instance& instance, const TapeSet& tapes,
                             std::size_t replicates, std::size_t jobs) {
  validate_algorithm(algorithm, instance);
  ReplicateBatch batch;
  batch.algorithm = algorithm;
  batch.replicates.resize(replicates);
  parallel_for(replicates, jobs, [&](std::size_t r) {
    const RunTrace trace = run_algorithm(algorithm, instance, tapes, r);
    batch.replicates[r] = replicate_metrics(trace, instance);
  });
  batch.summary = summarize(batch.replicates);
  return batch;
}

std::vector<MeanSe> feedback_identity_gap(const ReplicateBatch& batch, const Instance& instance) {
  std::vector<MeanSe> out;
  std::vector<double> gap(batch.replicates.size());
  for (ArmIndex i = 0; i < instance.num_arms(); ++i) {
    const double f = instance.feedback_prob(i);
    for (std::size_t r = 0; r < gap.size(); ++r)
      gap[r] = batch.replicates[r].foc[i] - f * batch.replicates[r].apc[i];
    out.push_back(mean_se(gap));
  }
  return out;
}

// -- Monotonicity ------------------------------------------------------------------

MonotonicityResult monotonicity_sweep(const AlgorithmSpec& algorithm, const Instance& base, ArmIndex arm,
                                      std::vector<double> f_grid, Coupling coupling, std::uint64_t seed,
                                      std::size_t replicates, std::optional<double> tolerance,
                                      std::size_t jobs) {
  if (arm >= base.num_arms()) throw ValidationError("sweep.arm: arm index out of range");
  if (f_grid.size() < 2) throw ValidationError("sweep.f_grid: need at least two grid points");
  std::sort(f_grid.begin(), f_grid.end());

  MonotonicityResult out;
  out.algorithm = algorithm;
  out.arm = arm;
  out.coupling = coupling;
  out.tolerance = tolerance.value_or(1.0 / static_cast<double>(base.horizon()));
  out.f_grid = f_grid;

  for (std::size_t g = 0; g < f_grid.size(); ++g) {
    const Instance point = base.with_feedback_prob(arm, f_grid[g]);
    const TapeSet tapes(coupling == Coupling::kCoupled ? seed : derive_seed(seed, g + 1));
    out.points.push_back(replicate_run(algorithm, point, tapes, replicates, jobs));
  }

  std::vector<double> a(replicates), b(replicates);
  auto column = [&](const ReplicateBatch& batch, Measure m, std::vector<double>& dst) {
    for (std::size_t r = 0; r < replicates; ++r)
      dst[r] = m == Measure::kApc ? batch.replicates[r].apc[arm] : batch.replicates[r].foc[arm];
  };
  for (Measure m : {Measure::kApc, Measure::kFoc}) {
    std::vector<GridEstimate> estimates;
    std::vector<MeanSe> diffs;
    for (std::size_t g = 0; g < f_grid.size(); ++g) {
      const MetricsSummary& s = out.points[g].summary;
      estimates.push_back({f_grid[g], m == Measure::kApc ? s.apc_mean[arm] : s.foc_mean[arm],
                           m == Measure::kApc ? s.apc_se[arm] : s.foc_se[arm]});
      if (g == 0) continue;
      column(out.points[g], m, a);
      column(out.points[g - 1], m, b);
      MeanSe d = paired_difference(a, b);
      if (coupling == Coupling::kIndependent) d.se = std::hypot(estimates[g].se, estimates[g - 1].se);
      diffs.push_back(d);
    }
    std::vector<double> diff_se;
    for (const MeanSe& d : diffs) diff_se.push_back(d.se);
    MonotonicityVerdict v = classify_monotonicity(estimates, out.tolerance, diff_se);
    v.measure = m;
    v.arm = arm;
    (m == Measure::kApc ? out.apc_difference : out.foc_difference) = diffs;
    (m == Measure::kApc ? out.apc_verdict : out.foc_verdict) = std::move(v);
  }
  return out;
}

// -- Correlation study ----------------------------------------------------------------

namespace {
std::uint64_t generator_salt(const std::string& id) {
  if (id == "bbpull_ucb") return 0;
  if (id == "three_phase_exp3_simplified") return 1;
  if (id == "bbpull_aae") return 2;
  throw ValidationError("algorithms: no instance generator for '" + id + "'");
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }
}  // namespace

GeneratorShape generator_shape(const std::string& algorithm_id) {
  generator_salt(algorithm_id);
  if (algorithm_id == "bbpull_aae") return {"utility", 0.0, 5.0, 0.5, 5.0};
  if (algorithm_id == "three_phase_exp3_simplified") return {"loss", -1.0, 0.0, 0.1, 1.0};
  return {"utility", 0.0, 1.0, 0.1, 1.0};
}

Instance generate_correlation_instance(const std::string& algorithm_id, const GeneratorConfig& generator,
                                       const TapeSet& tapes, std::size_t instance_id) {
  const std::uint64_t salt = generator_salt(algorithm_id);
  const GeneratorShape shape = generator_shape(algorithm_id);
  InstanceSpec spec;
  spec.horizon = generator.horizon;
  for (ArmIndex i = 0; i < generator.num_arms; ++i) {
    const double u = tapes.uniform(Stream::kGenerator, instance_id, i, 2 * salt);
    const double raw = shape.raw_low + (shape.raw_high - shape.raw_low) * u;
    // Utilities u become losses 1 - u/scale; raw losses in [-1, 0] shift up by one.
    const double mean = shape.quantity == "utility" ? 1.0 - raw / shape.scale : raw + 1.0;
    spec.loss_models.push_back(GaussianLoss{mean, shape.raw_stddev / shape.scale, 0.0, 1.0});
    spec.feedback_probs.push_back(tapes.open_uniform(Stream::kGenerator, instance_id, i, 2 * salt + 1));
  }
  return make_instance(std::move(spec));
}

std::vector<AlgorithmSpec> default_correlation_algorithms() {
  return {{"bbpull_ucb", {}}, {"three_phase_exp3_simplified", {}}, {"bbpull_aae", {}}};
}

CorrelationResult correlation_study(const GeneratorConfig& generator, const std::vector<AlgorithmSpec>& algorithms,
                                    std::uint64_t seed, std::size_t jobs) {
  const std::vector<AlgorithmSpec> algs = algorithms.empty() ? default_correlation_algorithms() : algorithms;
  const TapeSet tapes(seed);
  const std::size_t n = generator.num_instances;
  CorrelationResult out;
  out.rows.resize(algs.size() * n);
  parallel_for(out.rows.size(), jobs, [&](std::size_t idx) {
    const AlgorithmSpec& alg = algs[idx / n];
    const std::size_t id = idx % n;
    const Instance inst = generate_correlation_instance(alg.id, generator, tapes, id);
    const ReplicateMetrics m = replicate_metrics(run_algorithm(alg, inst, tapes, id), inst);
    const auto f = inst.feedback_probs();
    CorrelationRow row{alg.id, id, nan(), nan()};
    try {
      row.pearson_apc = pearson(f, m.apc);
    } catch (const std::invalid_argument&) {
    }
    try {
      row.pearson_foc = pearson(f, m.foc);
    } catch (const std::invalid_argument&) {
    }
    out.rows[idx] = row;
  });

  for (std::size_t a = 0; a < algs.size(); ++a) {
    CorrelationStats s;
    s.algorithm = algs[a].id;
    std::vector<double> apc, foc;
    for (std::size_t id = 0; id < n; ++id) {
      const CorrelationRow& row = out.rows[a * n + id];
      if (std::isnan(row.pearson_apc) || std::isnan(row.pearson_foc)) continue;
      apc.push_back(row.pearson_apc);
      foc.push_back(row.pearson_foc);
    }
    s.defined = apc.size();
    if (!apc.empty()) {
      s.apc_mean = mean_se(apc).mean;
      s.foc_mean = mean_se(foc).mean;
      s.apc_min = *std::min_element(apc.begin(), apc.end());
      s.apc_max = *std::max_element(apc.begin(), apc.end());
      s.foc_min = *std::min_element(foc.begin(), foc.end());
      s.foc_max = *std::max_element(foc.begin(), foc.end());
    }
    out.stats.push_back(s);
  }
  return out;
}

// -- Fig 1 ------------------------------------------------------------------------------

Fig1Result fig1_reproduction(const Fig1Config& config, std::uint64_t seed, std::size_t replicates,
                             std::size_t jobs) {
  Fig1Result out;
  out.horizon = config.horizon;
  out.other_arm_f = config.other_arm_f;
  std::vector<double> grid = config.f_grid;
  std::sort(grid.begin(), grid.end());
  const AlgorithmSpec alg{"three_phase_exp3_simplified", {}};
  const std::pair<double, double> losses[] = {{0.9, 0.1}, {0.1, 0.9}};
  for (std::size_t c = 0; c < 2; ++c) {
    Fig1Curve curve;
    curve.name = "instance" + std::to_string(c + 1);
    curve.arm1_loss = losses[c].first;
    curve.arm2_loss = losses[c].second;
    const TapeSet tapes(derive_seed(seed, c));
    std::vector<double> means;
    for (double f : grid) {
      const Instance inst = make_instance(
          {config.horizon, {f, config.other_arm_f}, {ConstantLoss{curve.arm1_loss}, ConstantLoss{curve.arm2_loss}}});
      const ReplicateBatch batch = replicate_run(alg, inst, tapes, replicates, jobs);
      curve.apc.push_back({f, batch.summary.apc_mean[0], batch.summary.apc_se[0]});
      means.push_back(batch.summary.apc_mean[0]);
    }
    curve.spearman = spearman(grid, means);
    curve.verdict = classify_monotonicity(curve.apc, 1.0 / static_cast<double>(config.horizon));
    curve.verdict.arm = 0;
    out.curves.push_back(std::move(curve));
  }
  return out;
}

// -- Linear-regret demonstration ------------------------------------------------------------

Instance prop3_instance(std::size_t horizon) {
  return make_instance({horizon, {0.25, 1.0}, {ConstantLoss{0.0}, ConstantLoss{0.5}}});
}

Instance prop3_twin_instance(std::size_t horizon) {
  return make_instance({horizon, {1.0, 1.0}, {BernoulliLoss{0.75}, ConstantLoss{0.5}}});
}

namespace {
RegretCurve sweep_horizons(const std::string& label, const std::vector<std::size_t>& horizons,
                           std::size_t replicates, std::size_t jobs,
                           const std::function<double(std::size_t horizon, std::size_t replicate)>& regret_of) {
  RegretCurve curve;
  curve.label = label;
  for (std::size_t h : horizons) {
    std::vector<double> regrets(replicates);
    parallel_for(replicates, jobs, [&](std::size_t r) { regrets[r] = regret_of(h, r); });
    curve.points.push_back({h, mean_se(regrets)});
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k)
    curve.growth_ratios.push_back(curve.points[k].regret.mean / curve.points[k - 1].regret.mean);
  return curve;
}
}  // namespace

Prop3Result prop3_demo(const std::vector<std::size_t>& horizons, std::uint64_t seed, std::size_t replicates,
                       std::size_t jobs) {
  Prop3Result out;
  const TapeSet tapes(derive_seed(seed, 0));
  const TapeSet twin_tapes(derive_seed(seed, 1));
  out.feedback = sweep_horizons("exp3_naive", horizons, replicates, jobs, [&](std::size_t h, std::size_t r) {
    const Instance inst = prop3_instance(h);
    return pseudo_regret(exp3_naive_run(inst, tapes, r), inst);
  });
  out.twin = sweep_horizons("exp3_naive_twin", horizons, replicates, jobs, [&](std::size_t h, std::size_t r) {
    const Instance inst = prop3_twin_instance(h);
    return pseudo_regret(exp3_naive_run(inst, twin_tapes, r), inst);
  });
  return out;
}

RegretCurve regret_sweep(const AlgorithmSpec& algorithm, const Instance& instance,
                         const std::vector<std::size_t>& horizons, std::uint64_t seed, std::size_t replicates,
                         std::size_t jobs) {
  validate_algorithm(algorithm, instance);
  const TapeSet tapes(seed);
  return sweep_horizons(algorithm.id, horizons, replicates, jobs, [&](std::size_t h, std::size_t r) {
    const Instance inst = instance.with_horizon(h);
    return pseudo_regret(run_algorithm(algorithm, inst, tapes, r), inst);
  });
}

// -- Simulated-oracle equivalence ----------------------------------------------------------

OracleResult oracle_equivalence(BaseAlgorithm base, const Instance& instance,
                                std::optional<std::vector<double>> oracle_feedback_probs, std::uint64_t seed,
                                std::size_t replicates, std::size_t jobs) {
  if (instance.has_adversarial_losses()) throw ValidationError("oracle check needs stochastic losses");
  OracleResult out;
  out.base = base;
  const Instance oracle_instance =
      oracle_feedback_probs ? instance.with_feedback_probs(*oracle_feedback_probs) : instance;
  out.oracle_feedback_probs.assign(oracle_instance.feedback_probs().begin(), oracle_instance.feedback_probs().end());

  const std::size_t k = instance.num_arms();
  const double horizon = static_cast<double>(std::max<std::size_t>(instance.horizon(), 2));
  const TapeSet real_tapes(derive_seed(seed, 1));
  const TapeSet sim_tapes(derive_seed(seed, 2));
  std::vector<std::vector<double>> real(k, std::vector<double>(replicates));
  std::vector<std::vector<double>> sim(k, std::vector<double>(replicates));
  parallel_for(replicates, jobs, [&](std::size_t r) {
    auto a = make_base_algorithm(base, k, horizon, real_tapes, r);
    const ArmCounts rc = compute_apc_foc(bb_pull_run(*a, instance, real_tapes, r), k);
    auto b = make_base_algorithm(base, k, horizon, sim_tapes, r);
    const ArmCounts sc = compute_apc_foc(simulated_bb_pull_run(*b, oracle_instance, sim_tapes, r), k);
    for (ArmIndex i = 0; i < k; ++i) {
      real[i][r] = static_cast<double>(rc.apc[i]);
      sim[i][r] = static_cast<double>(sc.apc[i]);
    }
  });
  out.all_within = true;
  for (ArmIndex i = 0; i < k; ++i) {
    OracleArm arm;
    arm.real_apc = mean_se(real[i]);
    arm.simulated_apc = mean_se(sim[i]);
    arm.difference = arm.real_apc.mean - arm.simulated_apc.mean;
    arm.combined_se = std::hypot(arm.real_apc.se, arm.simulated_apc.se);
    arm.within = std::abs(arm.difference) <= 3.0 * arm.combined_se;
    out.all_within = out.all_within && arm.within;
    out.arms.push_back(arm);
  }
  return out;
}

// -- Phase-2 estimator moments ------------------------------------------------------------------

EstimatorMoments estimator_moments(double f, std::uint64_t seed, std::size_t replicates, std::size_t jobs) {
  if (!(f > 0.0 && f <= 1.0)) throw ValidationError("estimator_moments: f must lie in (0,1]");
  // Long enough that phases 1-2 finish with overwhelming probability.
  const auto horizon = static_cast<std::size_t>(std::max(2000.0, std::ceil(200.0 / f)));
  const Instance inst = make_instance({horizon, {f}, {ConstantLoss{0.0}}});
  const TapeSet tapes(seed);
  std::vector<double> pe(replicates), pe2(replicates), plr(replicates);
  parallel_for(replicates, jobs, [&](std::size_t r) {
    const ThreePhaseRun run = three_phase_exp3_run(inst, tapes, r, false);
    if (run.phase3_start == 0) throw std::runtime_error("estimator_moments: horizon ran out before phase 3");
    pe[r] = run.p_e[0];
    pe2[r] = run.p_e[0] * run.p_e[0];
    plr[r] = run.p_lr[0];
  });
  return {f, replicates, mean_se(pe), mean_se(pe2), mean_se(plr)};
}

}  // namespace pfb
