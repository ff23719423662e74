#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pfb/core.hpp"
#include "pfb/transforms.hpp"
#include "support.hpp"

using namespace pfb;

TEST_CASE("make_instance validates and derives gaps") {
  const Instance inst = make_instance({1000, {0.5, 1.0}, {ConstantLoss{0.9}, ConstantLoss{0.1}}});
  CHECK(inst.num_arms() == 2);
  CHECK(inst.gap(0) == doctest::Approx(0.8));
  CHECK(inst.gap(1) == 0.0);
  CHECK(inst.best_arm() == 1);

  const Instance one = make_instance({1, {1.0}, {ConstantLoss{0.0}}});
  CHECK(one.num_arms() == 1);
  CHECK(one.gap(0) == 0.0);

  CHECK_THROWS_AS(make_instance({10, {1.2}, {ConstantLoss{0.1}}}), ValidationError);
  CHECK_THROWS_AS(make_instance({10, {}, {}}), ValidationError);
  CHECK_THROWS_AS(make_instance({0, {0.5}, {ConstantLoss{0.1}}}), ValidationError);
  CHECK_THROWS_AS(make_instance({3, {0.5}, {AdversarialLoss{{0.1, 0.2}}}}), ValidationError);
  CHECK_THROWS_AS(make_instance({3, {0.5, 0.5}, {ConstantLoss{0.1}}}), ValidationError);
  CHECK_THROWS_AS(make_instance({3, {0.5}, {ConstantLoss{1.5}}}), ValidationError);
}

TEST_CASE("validation messages name the failing field") {
  try {
    make_instance({10, {0.5, -0.1}, {ConstantLoss{0.1}, ConstantLoss{0.2}}});
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("feedback_probs[1]") != std::string::npos);
  }
}

TEST_CASE("draw_feedback") {
  CHECK(draw_feedback(0.3, 0.5));
  CHECK_FALSE(draw_feedback(0.7, 0.5));
  for (double u : {0.0, 0.5, 0.999999}) {
    CHECK(draw_feedback(u, 1.0));
    CHECK_FALSE(draw_feedback(u, 0.0));
  }
}

TEST_CASE("geometric_from_uniform") {
  CHECK(geometric_from_uniform(0.75, 0.5) == 2);
  CHECK(geometric_from_uniform(0.9, 0.25) == 9);
  for (double u : {0.01, 0.5, 0.99}) CHECK(geometric_from_uniform(u, 1.0) == 1);
  CHECK_THROWS_AS(geometric_from_uniform(0.5, 0.0), ValidationError);
  CHECK_THROWS_AS(geometric_from_uniform(0.0, 0.5), ValidationError);
}

TEST_CASE("coupling monotonicity of feedback and geometric draws") {
  const TapeSet tapes(11);
  for (std::size_t k = 0; k < 2000; ++k) {
    const double u = tapes.open_uniform(Stream::kGenerator, 0, 0, k);
    for (int step = 1; step < 20; ++step) {
      const double f = 0.05 * step;
      const double g = 0.05 * (step + 1);
      if (draw_feedback(u, f)) CHECK(draw_feedback(u, g));
      CHECK(geometric_from_uniform(u, f) >= geometric_from_uniform(u, g));
    }
  }
}

TEST_CASE("feedback and geometric draws have the right distribution") {
  const TapeSet tapes(2024);
  const std::size_t n = 100000;
  for (double f : {0.1, 0.37, 0.9}) {
    double hits = 0.0, sum = 0.0, sum_sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      hits += draw_feedback(tapes.uniform(Stream::kFeedback, 0, 0, k), f) ? 1.0 : 0.0;
      const double q = static_cast<double>(geometric_from_uniform(tapes.open_uniform(Stream::kGeometric, 0, 0, k), f));
      sum += q;
      sum_sq += q * q;
    }
    const double nd = static_cast<double>(n);
    CHECK(std::abs(hits / nd - f) <= 3.0 * std::sqrt(f * (1.0 - f) / nd));
    const double mean = sum / nd;
    const double se = std::sqrt((sum_sq / nd - mean * mean) / nd);
    CHECK(std::abs(mean - 1.0 / f) <= 3.0 * se);
  }
}

TEST_CASE("tape streams are deterministic and disjoint") {
  const TapeSet a(5), b(5), c(6);
  CHECK(a.uniform(Stream::kFeedback, 3, 1, 17) == b.uniform(Stream::kFeedback, 3, 1, 17));
  CHECK(a.uniform(Stream::kFeedback, 3, 1, 17) != c.uniform(Stream::kFeedback, 3, 1, 17));
  CHECK(a.uniform(Stream::kFeedback, 3, 1, 17) != a.uniform(Stream::kLossNoise, 3, 1, 17));
  CHECK(a.uniform(Stream::kFeedback, 3, 1, 17) != a.uniform(Stream::kFeedback, 3, 2, 17));
  CHECK(a.uniform(Stream::kFeedback, 3, 1, 17) != a.uniform(Stream::kFeedback, 4, 1, 17));

  // Feedback and loss-noise uniforms should look uncorrelated.
  const std::size_t n = 20000;
  double sxy = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    sxy += (a.uniform(Stream::kFeedback, 0, 0, t) - 0.5) * (a.uniform(Stream::kLossNoise, 0, 0, t) - 0.5);
  const double corr = sxy / static_cast<double>(n) * 12.0;
  CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sample_loss") {
  const TapeSet tapes(1);
  CHECK(sample_loss(ConstantLoss{0.9}, 0, 17, tapes, 0) == 0.9);
  CHECK(sample_loss(AdversarialLoss{{0.1, 0.7}}, 0, 2, tapes, 0) == 0.7);

  // Mean 0.05, sd 0.1: draws below zero are truncated to exactly 0.
  const GaussianLoss g{0.05, 0.1};
  const std::size_t n = 50000;
  std::size_t zeros = 0;
  double lowest = 1.0;
  for (Round t = 1; t <= n; ++t) {
    const double x = sample_loss(g, 0, t, tapes, 0);
    lowest = std::min(lowest, x);
    zeros += x == 0.0;
  }
  CHECK(lowest == 0.0);
  const double p = 0.5 * std::erfc(0.5 / std::numbers::sqrt2);  // P(Z < -0.5)
  CHECK(std::abs(static_cast<double>(zeros) / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n));

  double ones = 0.0;
  for (Round t = 1; t <= n; ++t) ones += sample_loss(BernoulliLoss{0.75}, 0, t, tapes, 0);
  CHECK(std::abs(ones / n - 0.75) <= 3.0 * std::sqrt(0.75 * 0.25 / n));
}

TEST_CASE("expected loss of a clipped gaussian matches numerical integration") {
  for (double mean : {0.05, 0.5, 0.97}) {
    const GaussianLoss g{mean, 0.1};
    // Trapezoid rule over ±10 sd.
    const int steps = 200000;
    const double lo = mean - 1.0, hi = mean + 1.0, h = (hi - lo) / steps;
    double acc = 0.0;
    for (int k = 0; k <= steps; ++k) {
      const double x = lo + k * h;
      const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
      const double pdf = std::exp(-0.5 * std::pow((x - mean) / 0.1, 2)) / (0.1 * std::sqrt(2 * std::numbers::pi));
      acc += w * std::clamp(x, 0.0, 1.0) * pdf;
    }
    CHECK(expected_loss(g) == doctest::Approx(acc * h).epsilon(1e-6));
  }
}

TEST_CASE("identical seeds give bit-identical traces") {
  const Instance inst = testing::gaussian_instance(3000, {0.3, 0.6, 0.9}, {0.2, 0.5, 0.8});
  const TapeSet t1(99), t2(99);
  for (const std::string& id : algorithm_ids()) {
    AlgorithmSpec spec{id, {}};
    if (requires_f_star(id)) spec.f_star = 0.3;
    CHECK_MESSAGE(testing::same_trace(run_algorithm(spec, inst, t1, 4), run_algorithm(spec, inst, t2, 4)), id);
  }
}

TEST_CASE("trace records losses only when observed") {
  const Instance inst = testing::gaussian_instance(2000, {0.3, 0.6}, {0.2, 0.8});
  const RunTrace trace = run_algorithm({"bbpull_ucb", {}}, inst, TapeSet(3), 0);
  CHECK(trace.complete());
  for (const RoundRecord& r : trace.rounds) {
    CHECK(r.observed_loss().has_value() == r.observed);
    if (!r.observed) CHECK(r.loss == 0.0);
  }
}
