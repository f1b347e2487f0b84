#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "dob/disturbance.hpp"
#include "dob/errors.hpp"
#include "rng.hpp"

using namespace dob;
constexpr double kPi = std::numbers::pi;

TEST(Disturbance, ConstantAndRamp) {
  const ConstantSignal c{0.4, 1.0};
  EXPECT_EQ(eval_disturbance(c, 0.5), 0.0);
  EXPECT_EQ(eval_disturbance(c, 1.0), 0.4);
  EXPECT_EQ(eval_disturbance(c, 1.0, Limit::FromLeft), 0.0);
  EXPECT_EQ(eval_disturbance(c, 1.0, Limit::FromRight), 0.4);
  EXPECT_EQ(eval_disturbance(ConstantSignal{0.4}, -1e9), 0.4);

  const RampSignal r{2.0, 1.0};
  EXPECT_EQ(eval_disturbance(r, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(eval_disturbance(r, 1.5), 1.0);
  EXPECT_DOUBLE_EQ(eval_disturbance_derivative(r, 1.5, 1), 2.0);
  EXPECT_EQ(eval_disturbance_derivative(r, 0.5, 1), 0.0);
  EXPECT_EQ(eval_disturbance_derivative(r, 1.5, 2), 0.0);
}

TEST(Disturbance, TestProfileFormula) {
  const auto s = multisine_test_profile();
  for (double t : {3.0, 3.3, 5.0, 7.9, 8.0}) {
    const double tau = t - 3.0;
    const double want = 0.35 * std::sin(2.5 * kPi * tau) + 0.47 * std::cos(1.7 * kPi * tau) +
                        0.56 * std::sin(1.5 * kPi * tau) * std::cos(3.5 * kPi * tau);
    EXPECT_NEAR(eval_disturbance(s, t), want, 1e-15) << t;
  }
  EXPECT_EQ(eval_disturbance(s, 2.999), 0.0);
  EXPECT_EQ(eval_disturbance(s, 8.001), 0.0);
  EXPECT_EQ(eval_disturbance(s, 3.0, Limit::FromLeft), 0.0);
  EXPECT_NEAR(eval_disturbance(s, 3.0, Limit::FromRight), 0.47, 1e-15);
  EXPECT_EQ(eval_disturbance(s, 8.0, Limit::FromRight), 0.0);
}

TEST(Disturbance, MultisineDerivativesMatchFiniteDifferences) {
  const auto s = multisine_test_profile();
  const double h = 1e-4;
  for (double t : {3.4, 4.1, 6.77}) {
    for (int order = 1; order <= 3; ++order) {
      auto f = [&](double x) { return eval_disturbance_derivative(s, x, order - 1); };
      const double fd = (f(t + h) - f(t - h)) / (2.0 * h);
      const double exact = eval_disturbance_derivative(s, t, order);
      EXPECT_NEAR(exact, fd, 1e-5 * std::max(1.0, std::abs(exact))) << t << " " << order;
    }
  }
  EXPECT_NEAR(eval_disturbance_derivative(s, 4.0, 0), eval_disturbance(s, 4.0), 1e-15);
}

TEST(Disturbance, SinusoidDerivative) {
  const SinusoidSignal s{1.5, 2.0, 0.3};
  const double w = 4.0 * kPi;
  EXPECT_NEAR(eval_disturbance(s, 0.1), 1.5 * std::sin(w * 0.1 + 0.3), 1e-15);
  EXPECT_NEAR(eval_disturbance_derivative(s, 0.1, 1), 1.5 * w * std::cos(w * 0.1 + 0.3), 1e-12);
  EXPECT_NEAR(eval_disturbance_derivative(s, 0.1, 2), -1.5 * w * w * std::sin(w * 0.1 + 0.3),
              1e-10);
  EXPECT_THROW(eval_disturbance_derivative(s, 0.1, -1), ValidationError);
}

TEST(Disturbance, BreakpointsInsideOpenInterval) {
  const auto s = multisine_test_profile();
  EXPECT_EQ(breakpoints(s, 0.0, 10.0), (std::vector<double>{3.0, 8.0}));
  EXPECT_TRUE(breakpoints(s, 3.0, 8.0).empty());
  EXPECT_TRUE(breakpoints(SinusoidSignal{1.0, 1.0, 0.0}, 0.0, 1.0).empty());
  EXPECT_EQ(breakpoints(RampSignal{1.0, 0.25}, 0.0, 1.0), (std::vector<double>{0.25}));

  SampledSignal z{0.0, 0.1, {1.0, 2.0, 3.0, 4.0}, Hold::ZeroOrder};
  EXPECT_EQ(breakpoints(z, 0.05, 0.25).size(), 2u);
  EXPECT_TRUE(breakpoints(z, 0.1, 0.2).empty());
}

TEST(Disturbance, SampledHolds) {
  SampledSignal z{1.0, 0.5, {1.0, 3.0, 2.0}, Hold::ZeroOrder};
  EXPECT_EQ(eval_disturbance(z, 0.9), 0.0);
  EXPECT_EQ(eval_disturbance(z, 1.0), 1.0);
  EXPECT_EQ(eval_disturbance(z, 1.2), 1.0);
  EXPECT_EQ(eval_disturbance(z, 1.5), 3.0);
  EXPECT_EQ(eval_disturbance(z, 1.5, Limit::FromLeft), 1.0);
  EXPECT_EQ(eval_disturbance(z, 9.0), 2.0);  // last sample held

  SampledSignal l = z;
  l.hold = Hold::Linear;
  EXPECT_DOUBLE_EQ(eval_disturbance(l, 1.25), 2.0);
  EXPECT_DOUBLE_EQ(eval_disturbance_derivative(l, 1.25, 1), 4.0);
  EXPECT_DOUBLE_EQ(eval_disturbance(l, 1.75), 2.5);
  EXPECT_EQ(eval_disturbance(l, 9.0), 2.0);
  EXPECT_EQ(eval_disturbance_derivative(z, 1.25, 1), 0.0);
}

TEST(Disturbance, SampleAndHold) {
  const auto h = sample_and_hold(SinusoidSignal{1.0, 1.0, 0.0}, 0.25, 1.0);
  ASSERT_EQ(h.samples.size(), 5u);
  EXPECT_NEAR(h.samples[1], 1.0, 1e-15);
  EXPECT_NEAR(eval_disturbance(h, 0.3), 1.0, 1e-15);
  EXPECT_THROW(sample_and_hold(ZeroSignal{}, 0.0, 1.0), ValidationError);
  EXPECT_THROW(sample_and_hold(ZeroSignal{}, 0.1, -1.0), ValidationError);
}

TEST(Disturbance, Validation) {
  EXPECT_NO_THROW(validate(multisine_test_profile()));
  EXPECT_THROW(validate(ConstantSignal{std::nan(""), 0.0}), ValidationError);
  MultiSineSignal bad = multisine_test_profile();
  bad.t_off = 1.0;
  EXPECT_THROW(validate(bad), ValidationError);
  EXPECT_THROW(validate(SampledSignal{0.0, 0.0, {1.0}, Hold::ZeroOrder}), ValidationError);
  EXPECT_THROW(validate(SinusoidSignal{1.0, std::numeric_limits<double>::infinity(), 0.0}),
               ValidationError);
}

TEST(Disturbance, DescribeNamesTheSignal) {
  EXPECT_NE(describe(multisine_test_profile()).find("multisine"), std::string::npos);
  EXPECT_FALSE(describe(ZeroSignal{}).empty());
}

// Property: one-sided limits agree with the point value away from breakpoints.
TEST(DisturbanceProperty, LimitsAgreeAwayFromBreakpoints) {
  dob::testing::Rng rng(21);
  const DisturbanceSignal signals[] = {multisine_test_profile(), RampSignal{0.7, 2.0},
                                       ConstantSignal{1.0, 4.0},
                                       sample_and_hold(SinusoidSignal{1, 1, 0}, 0.01, 10.0)};
  for (const auto& s : signals) {
    for (int i = 0; i < 200; ++i) {
      const double t = rng.uniform(0.0, 10.0);
      if (!breakpoints(s, t - 1e-6, t + 1e-6).empty()) continue;
      const double p = eval_disturbance(s, t);
      EXPECT_EQ(eval_disturbance(s, t, Limit::FromLeft), p);
      EXPECT_EQ(eval_disturbance(s, t, Limit::FromRight), p);
    }
  }
}
