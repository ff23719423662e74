#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pfb/metrics.hpp"
#include "pfb/transforms.hpp"
#include "support.hpp"

using namespace pfb;
using testing::gaussian_instance;
using testing::ScriptedAlgorithm;

TEST_CASE("block sizes") {
  CHECK(bbdivide_block_size(1000.0, 1.0) == 21);
  CHECK(bbdivide_block_size(1000.0, 0.5) == 42);
  CHECK(bbdivide_block_size(std::numbers::e, 1.0) == 3);
  CHECK(bbda_block_size(1000.0, 0.5, 0.5) == 63);
  CHECK(bbda_block_size(1000.0, 0.5, 0.0) == 42);
  CHECK(bbda_block_size(1000.0, 0.5, 1.0) == 83);
  CHECK_THROWS_AS(bbdivide_block_size(1000.0, 0.0), ValidationError);
  CHECK_THROWS_AS(bbda_block_size(1000.0, 0.0, 0.5), ValidationError);
  std::size_t previous = 0;
  for (double f = 0.0; f <= 1.0; f += 0.1) {
    CHECK(bbda_block_size(1000.0, 0.5, f) >= previous);
    previous = bbda_block_size(1000.0, 0.5, f);
  }
}

TEST_CASE("divide: full blocks then uniformly random remainder") {
  // B = ceil(3 ln 100 * 3) = 42, so two blocks and 16 leftover rounds.
  const Instance inst = gaussian_instance(100, {0.5, 0.5}, {0.3, 0.6});
  REQUIRE(bbdivide_block_size(100.0, 1.0 / 3.0) == 42);
  ScriptedAlgorithm alg(2, {1, 0});
  const RunTrace trace = bb_divide_run(alg, inst, 1.0 / 3.0, TapeSet(4), 0);
  CHECK(trace.complete());
  CHECK(trace.feeds == 2);
  CHECK(alg.fed.size() == 2);
  for (std::size_t t = 0; t < 42; ++t) CHECK(trace.rounds[t].arm == 1);
  for (std::size_t t = 42; t < 84; ++t) CHECK(trace.rounds[t].arm == 0);

  // Remainder arms are uniform: check over many replicates.
  std::size_t zeros = 0, total = 0;
  for (std::size_t r = 0; r < 500; ++r) {
    ScriptedAlgorithm a(2, {1});
    const RunTrace tr = bb_divide_run(a, inst, 1.0 / 3.0, TapeSet(4), r);
    for (std::size_t t = 84; t < 100; ++t, ++total) zeros += tr.rounds[t].arm == 0;
  }
  const double p = static_cast<double>(zeros) / total;
  CHECK(std::abs(p - 0.5) <= 3.0 * std::sqrt(0.25 / total));
}

TEST_CASE("divide feeds one of the block's observations, or 1 when there are none") {
  const Instance certain = make_instance({1000, {1.0, 1.0}, {GaussianLoss{0.3}, GaussianLoss{0.6}}});
  ScriptedAlgorithm alg(2, {0, 1});
  const TapeSet tapes(12);
  const RunTrace trace = bb_divide_run(alg, certain, 1.0, tapes, 0);
  const std::size_t B = 21;
  for (std::size_t phi = 0; phi < alg.fed.size(); ++phi) {
    std::size_t observed = 0;
    bool found = false;
    for (std::size_t t = phi * B; t < (phi + 1) * B; ++t) {
      observed += trace.rounds[t].observed;
      found = found || trace.rounds[t].loss == alg.fed[phi];
    }
    CHECK(observed == B);
    CHECK(found);
  }

  const Instance silent = make_instance({300, {0.0, 0.5}, {ConstantLoss{0.2}, ConstantLoss{0.2}}});
  ScriptedAlgorithm zero(2, {0});
  bb_divide_run(zero, silent, 0.5, tapes, 0);
  REQUIRE_FALSE(zero.fed.empty());
  for (double x : zero.fed) CHECK(x == 1.0);
}

TEST_CASE("divide rarely sees an empty block when f* <= min f") {
  const Instance inst = make_instance({1000, {0.5, 0.5}, {ConstantLoss{0.0}, ConstantLoss{0.0}}});
  const TapeSet tapes(31);
  std::size_t blocks = 0, empty = 0;
  for (std::size_t r = 0; blocks < 1000000; ++r) {
    ScriptedAlgorithm alg(2, {0, 1});
    bb_divide_run(alg, inst, 0.5, tapes, r);
    blocks += alg.fed.size();
    for (double x : alg.fed) empty += x == 1.0;
  }
  CHECK(static_cast<double>(empty) / blocks <= 10.0 / (1000.0 * 1000.0));
}

TEST_CASE("pull: identical to the wrapped algorithm under certain feedback") {
  const Instance inst = gaussian_instance(3000, {1.0, 1.0, 1.0}, {0.3, 0.5, 0.4});
  const TapeSet tapes(6);
  UcbAlgorithm wrapped(3, 3000.0);
  const RunTrace trace = bb_pull_run(wrapped, inst, tapes, 2);

  UcbAlgorithm direct(3, 3000.0);
  for (Round t = 1; t <= 3000; ++t) {
    const ArmIndex a = direct.select();
    REQUIRE(trace.rounds[t - 1].arm == a);
    direct.feed(a, sample_loss(inst, a, t, tapes, 2));
  }
  CHECK(trace.feeds == 3000);
}

TEST_CASE("pull: block lengths are geometric") {
  const Instance inst = make_instance({10000 * 4, {0.5}, {ConstantLoss{0.2}}});
  ScriptedAlgorithm alg(1, {0});
  const RunTrace trace = bb_pull_run(alg, inst, TapeSet(77), 0);
  std::vector<double> lengths;
  std::size_t current = 0;
  for (const RoundRecord& r : trace.rounds) {
    ++current;
    if (r.observed) {
      lengths.push_back(static_cast<double>(current));
      current = 0;
    }
  }
  REQUIRE(lengths.size() >= 10000);
  const MeanSe m = mean_se(lengths);
  CHECK(std::abs(m.mean - 2.0) <= 3.0 * m.se);
}

TEST_CASE("pull: the horizon can end a block without a feed") {
  const Instance inst = make_instance({50, {0.02, 1.0}, {ConstantLoss{0.2}, ConstantLoss{0.1}}});
  ScriptedAlgorithm alg(2, {0});
  const RunTrace trace = bb_pull_run(alg, inst, TapeSet(3), 0);
  CHECK(trace.size() == 50);
  CHECK(alg.awaiting_feed() == (trace.rounds.back().observed == false));
  CHECK(alg.fed.size() == trace.feeds);

  const Instance stuck = make_instance({40, {0.0, 1.0}, {ConstantLoss{0.2}, ConstantLoss{0.1}}});
  ScriptedAlgorithm s(2, {0});
  const RunTrace st = bb_pull_run(s, stuck, TapeSet(3), 0);
  CHECK(st.size() == 40);
  CHECK(st.stalled);
  CHECK(st.feeds == 0);
}

TEST_CASE("divide-adjusted: per-arm block sizes and truncation") {
  const Instance inst = gaussian_instance(1000, {0.5, 1.0}, {0.3, 0.6});
  ScriptedAlgorithm alg(2, {0, 1});
  const RunTrace trace = bb_da_run(alg, inst, 0.5, TapeSet(8), 0);
  const auto lengths = testing::run_lengths(trace);
  // 63 + 83 = 146 per pair; six pairs fill 876 rounds, a 63-block brings 939, the last 61 rounds truncate.
  for (std::size_t k = 0; k + 1 < lengths.size(); ++k) CHECK(lengths[k] == (k % 2 == 0 ? 63u : 83u));
  CHECK(lengths.back() == 1000 - 939);
  CHECK(trace.feeds == 13);
  CHECK(alg.fed.size() == 13);
  CHECK(alg.awaiting_feed());

  CHECK_THROWS_AS(validate_algorithm({"bbda_ucb", 0.6}, inst), ValidationError);

  const Instance uniform = gaussian_instance(2000, {0.4, 0.4, 0.4}, {0.3, 0.6, 0.5});
  ScriptedAlgorithm cyc(3, {0, 1, 2});
  const RunTrace u = bb_da_run(cyc, uniform, 0.4, TapeSet(8), 0);
  const auto ul = testing::run_lengths(u);
  for (std::size_t k = 0; k + 1 < ul.size(); ++k) CHECK(ul[k] == bbda_block_size(2000.0, 0.4, 0.4));
}

TEST_CASE("fused algorithms match their black-box counterparts") {
  const TapeSet tapes(2718);
  for (std::size_t r = 0; r < 6; ++r) {
    const Instance inst = gaussian_instance(6000, {0.3 + 0.1 * r, 0.9, 0.5}, {0.5, 0.45, 0.55});
    UcbAlgorithm ucb(3, 6000.0);
    CHECK(testing::same_trace(bbpull_ucb_run(inst, tapes, r), bb_pull_run(ucb, inst, tapes, r)));
    AaeAlgorithm aae(3, 6000.0);
    CHECK(testing::same_trace(bbpull_aae_run(inst, tapes, r), bb_pull_run(aae, inst, tapes, r)));
    AaeAlgorithm da(3, 6000.0, AaeAlgorithm::PhaseLength::kBbdaBlocks);
    CHECK(testing::same_trace(bbda_aae_run(inst, 0.3, tapes, r), bb_da_run(da, inst, 0.3, tapes, r)));
  }
}

TEST_CASE("bbpull aae") {
  const Instance single = make_instance({500, {0.3}, {GaussianLoss{0.4}}});
  const RunTrace t1 = bbpull_aae_run(single, TapeSet(1), 0);
  CHECK(t1.size() == 500);
  for (const RoundRecord& r : t1.rounds) CHECK(r.arm == 0);

  // Gap 0.8 under full feedback: the suboptimal arm is gone by the end of phase 3.
  const Instance inst = gaussian_instance(20000, {1.0, 1.0}, {0.1, 0.9});
  const TapeSet tapes(5);
  std::size_t early = 0;
  const std::size_t R = 500;
  for (std::size_t r = 0; r < R; ++r) {
    AaeAlgorithm aae(2, 20000.0);
    bb_pull_run(aae, inst, tapes, r);
    const std::size_t s = aae.state().eliminated_in_phase[1];
    early += s != 0 && s <= 3;
  }
  CHECK(static_cast<double>(early) >= 0.95 * R);
}

TEST_CASE("bbpull aae: observation quotas make FOC insensitive to f") {
  const Instance lo = gaussian_instance(20000, {0.4, 0.6, 0.6}, {0.9, 0.5, 0.1});
  const Instance hi = lo.with_feedback_prob(0, 0.8);
  const TapeSet tapes(9);
  std::vector<double> a, b;
  for (std::size_t r = 0; r < 100; ++r) {
    a.push_back(static_cast<double>(compute_apc_foc(bbpull_aae_run(hi, tapes, r), 3).foc[0]));
    b.push_back(static_cast<double>(compute_apc_foc(bbpull_aae_run(lo, tapes, r), 3).foc[0]));
  }
  const MeanSe d = paired_difference(a, b);
  CHECK(std::abs(d.mean) <= 1.0 / 20000.0 + 3.0 * d.se);
}

TEST_CASE("bbpull ucb") {
  const Instance inst = gaussian_instance(4000, {1.0, 1.0, 1.0, 1.0}, {0.5, 0.4, 0.6, 0.45});
  const RunTrace tr = bbpull_ucb_run(inst, TapeSet(3), 0);
  for (ArmIndex i = 0; i < 4; ++i) CHECK(tr.rounds[i].arm == i);

  const Instance partial = gaussian_instance(4000, {0.2, 0.7, 0.4}, {0.5, 0.4, 0.6});
  UcbAlgorithm ucb(3, 4000.0);
  const ArmCounts c = compute_apc_foc(bb_pull_run(ucb, partial, TapeSet(3), 1), 3);
  for (ArmIndex i = 0; i < 3; ++i) CHECK(c.foc[i] == ucb.state().pulls[i]);
}

TEST_CASE("bbda aae") {
  // Identical arms: phase 1 is split exactly (no elimination is possible at radius 1/2).
  const Instance sym = gaussian_instance(20000, {0.5, 0.5}, {0.5, 0.5});
  const std::size_t B = bbda_block_size(20000.0, 0.5, 0.5);
  const std::size_t phase1 = aae_bbda_phase_blocks(1, 20000.0) * B;
  const RunTrace t = bbda_aae_run(sym, 0.5, TapeSet(2), 0);
  std::size_t first = 0;
  for (std::size_t k = 0; k < 2 * phase1; ++k) first += t.rounds[k].arm == 0;
  CHECK(first == phase1);

  // Raising the suboptimal arm's f lengthens its blocks, so its APC rises on paired tapes.
  // Phase 1 must fit inside T for the sweep to matter; arm 0 then absorbs the truncated phase 2.
  const Instance lo = gaussian_instance(20000, {0.9, 0.9}, {0.1, 0.9});
  const Instance hi = lo.with_feedback_prob(1, 1.0);
  const TapeSet tapes(14);
  std::vector<double> a, b;
  for (std::size_t r = 0; r < 50; ++r) {
    a.push_back(static_cast<double>(compute_apc_foc(bbda_aae_run(hi, 0.9, tapes, r), 2).apc[1]));
    b.push_back(static_cast<double>(compute_apc_foc(bbda_aae_run(lo, 0.9, tapes, r), 2).apc[1]));
  }
  const MeanSe d = paired_difference(a, b);
  CHECK(d.mean >= 3.0 * d.se);
  CHECK(d.mean > 0.0);

  // A block with no observation contributes loss 1 to the phase mean.
  const Instance silent = make_instance({20000, {0.0, 0.5}, {ConstantLoss{0.0}, ConstantLoss{0.5}}});
  AaeAlgorithm aae(2, 20000.0, AaeAlgorithm::PhaseLength::kBbdaBlocks);
  bb_da_run(aae, silent, 0.5, TapeSet(1), 0);
  CHECK(aae.state().phase_means[0] == -1.0);
}

TEST_CASE("loss estimator and learning rate") {
  CHECK(exp3_loss_estimator(0.5, true, 0.25, 4.0) == 8.0);
  CHECK(exp3_loss_estimator(0.5, false, 0.25, 4.0) == 0.0);
  CHECK(exp3_learning_rate(2, 1000.0, 6.0) == doctest::Approx(0.010748).epsilon(1e-5 / 0.010748));
  CHECK(exp3_learning_rate(2, 1.0, 2.0) == doctest::Approx(0.5887).epsilon(1e-4));
  CHECK(exp3_learning_rate(5, 1000.0, 10.0) / exp3_learning_rate(5, 1000.0, 20.0) ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(three_phase_observation_target(1000, 2) == 61);
}

TEST_CASE("loss estimator is unbiased with an independent geometric P^E") {
  const TapeSet tapes(4242);
  const double loss = 0.5, pi = 0.25, f = 0.4;
  const std::size_t n = 100000;
  std::vector<double> est(n);
  for (std::size_t k = 0; k < n; ++k) {
    const bool pulled = tapes.uniform(Stream::kAlgorithm, 0, 0, k) < pi;
    const bool observed = draw_feedback(tapes.uniform(Stream::kFeedback, 0, 0, k), f);
    const double p_e = static_cast<double>(geometric_from_uniform(tapes.open_uniform(Stream::kGeometric, 0, 0, k), f));
    est[k] = pulled ? exp3_loss_estimator(loss, observed, pi, p_e) : 0.0;
  }
  const MeanSe m = mean_se(est);
  CHECK(std::abs(m.mean - loss) <= 3.0 * m.se);
}

TEST_CASE("three-phase exp3, full mode") {
  const Instance inst = make_instance({1000, {1.0, 1.0}, {ConstantLoss{0.9}, ConstantLoss{0.1}}});
  const ThreePhaseRun run = three_phase_exp3_run(inst, TapeSet(1), 0, false);
  for (std::size_t t = 0; t < 61; ++t) CHECK(run.trace.rounds[t].arm == 0);
  for (std::size_t t = 61; t < 122; ++t) CHECK(run.trace.rounds[t].arm == 1);
  CHECK(run.p_lr == std::vector<double>{1.0, 1.0});
  CHECK(run.p_e == std::vector<double>{1.0, 1.0});
  CHECK(run.phase3_start == 125);
  CHECK(run.eta == doctest::Approx(std::sqrt(std::log(2.0) / 2000.0)));
  CHECK(run.trace.complete());

  CHECK_THROWS_AS(three_phase_exp3_run(inst.with_feedback_prob(1, 0.0), TapeSet(1), 0, false), ValidationError);
}

TEST_CASE("three-phase exp3, simplified mode concentrates on the better arm") {
  const Instance inst = make_instance({1000, {1.0, 1.0}, {ConstantLoss{0.9}, ConstantLoss{0.1}}});
  const TapeSet tapes(10);
  const std::size_t R = 200;
  std::size_t good = 0;
  for (std::size_t r = 0; r < R; ++r) {
    const ThreePhaseRun run = three_phase_exp3_run(inst, tapes, r, true);
    CHECK(run.phase3_start == 1);
    good += run.final_state.probs[1] > 0.9;
  }
  CHECK(static_cast<double>(good) >= 0.95 * R);
}

TEST_CASE("three-phase estimates: P^E mean and P^LR concentration") {
  const Instance inst = make_instance({1000, {0.5, 0.8}, {ConstantLoss{0.4}, ConstantLoss{0.6}}});
  const TapeSet tapes(66);
  const std::size_t R = 3000;
  std::vector<double> pe(R), outside(R);
  for (std::size_t r = 0; r < R; ++r) {
    const ThreePhaseRun run = three_phase_exp3_run(inst, tapes, r, false);
    REQUIRE(run.phase3_start > 0);
    pe[r] = run.p_e[0];
    outside[r] = (run.p_lr[0] < 1.0 / (2 * 0.5) || run.p_lr[0] > 2.0 / 0.5) ? 1.0 : 0.0;
  }
  const MeanSe m = mean_se(pe);
  CHECK(std::abs(m.mean - 2.0) <= 3.0 * m.se);
  const MeanSe o = mean_se(outside);
  CHECK(o.mean <= 2.0 / 1000.0 + 3.0 * o.se);
}

TEST_CASE("simulated pull driver") {
  const Instance certain = gaussian_instance(800, {1.0, 1.0, 1.0}, {0.5, 0.4, 0.6});
  const TapeSet tapes(19);
  for (std::size_t r = 0; r < 5; ++r) {
    UcbAlgorithm a(3, 800.0), b(3, 800.0);
    CHECK(testing::same_trace(simulated_bb_pull_run(a, certain, tapes, r), bb_pull_run(b, certain, tapes, r)));
  }

  const Instance inst = gaussian_instance(3000, {0.3, 0.7}, {0.5, 0.4});
  ScriptedAlgorithm alg(2, {0, 1, 1});
  const RunTrace trace = simulated_bb_pull_run(alg, inst, tapes, 3);
  // Blocks on the same arm can be adjacent, so split on observations rather than arm changes.
  std::vector<std::size_t> blocks;
  std::size_t cur = 0;
  for (const RoundRecord& rec : trace.rounds) {
    ++cur;
    if (rec.observed) {
      blocks.push_back(cur);
      cur = 0;
    }
  }
  REQUIRE(blocks.size() == trace.feeds);
  for (std::size_t phi = 1; phi <= blocks.size(); ++phi) {
    const ArmIndex arm = alg.chosen[phi - 1];
    const std::size_t q =
        geometric_from_uniform(tapes.open_uniform(Stream::kGeometric, 3, arm, phi), inst.feedback_prob(arm));
    CHECK(blocks[phi - 1] == q);
  }
}

TEST_CASE("every algorithm conserves rounds and respects FOC <= APC") {
  const Instance inst = gaussian_instance(2500, {0.35, 0.6, 0.9, 0.5}, {0.2, 0.5, 0.7, 0.4});
  const TapeSet tapes(55);
  for (const std::string& id : algorithm_ids()) {
    AlgorithmSpec spec{id, {}};
    if (requires_f_star(id)) spec.f_star = 0.35;
    validate_algorithm(spec, inst);
    const RunTrace trace = run_algorithm(spec, inst, tapes, 1);
    CHECK_MESSAGE(trace.complete(), id);
    const ArmCounts c = compute_apc_foc(trace, 4);
    std::size_t total = 0;
    for (ArmIndex i = 0; i < 4; ++i) {
      total += c.apc[i];
      CHECK(c.foc[i] <= c.apc[i]);
    }
    CHECK_MESSAGE(total == 2500, id);
  }
}

TEST_CASE("reduction under certain feedback") {
  const Instance inst = gaussian_instance(2000, {1.0, 1.0, 1.0}, {0.5, 0.4, 0.6});
  const TapeSet tapes(3);
  const std::size_t B = bbdivide_block_size(2000.0, 1.0);
  for (const char* id : {"bbdivide_ucb", "bbda_aae", "bbdivide_exp3"}) {
    const RunTrace tr = run_algorithm({id, 1.0}, inst, tapes, 0);
    const std::size_t block = std::string(id).rfind("bbda", 0) == 0 ? bbda_block_size(2000.0, 1.0, 1.0) : B;
    for (std::size_t phi = 0; phi < tr.feeds; ++phi)
      for (std::size_t t = phi * block; t < (phi + 1) * block; ++t)
        REQUIRE(tr.rounds[t].arm == tr.rounds[phi * block].arm);
  }
}

TEST_CASE("algorithm validation") {
  const Instance inst = gaussian_instance(100, {0.3, 0.6}, {0.2, 0.5});
  CHECK_THROWS_AS(validate_algorithm({"nope", {}}, inst), ValidationError);
  CHECK_THROWS_AS(validate_algorithm({"bbdivide_ucb", {}}, inst), ValidationError);
  CHECK_THROWS_AS(validate_algorithm({"bbda_exp3", 0.5}, inst), ValidationError);
  CHECK_NOTHROW(validate_algorithm({"bbda_exp3", 0.3}, inst));

  std::vector<double> tape(100, 0.3);
  const Instance adv = make_instance({100, {0.5, 0.5}, {AdversarialLoss{tape}, ConstantLoss{0.4}}});
  CHECK_THROWS_AS(validate_algorithm({"bbpull_ucb", {}}, adv), ValidationError);
  CHECK_THROWS_AS(validate_algorithm({"bbda_aae", 0.5}, adv), ValidationError);
  CHECK_NOTHROW(validate_algorithm({"bbdivide_exp3", 0.5}, adv));
  CHECK_NOTHROW(validate_algorithm({"bbda_ucb", 0.5}, adv));
}
