#include <cmath>

#include <gtest/gtest.h>

#include "dob/errors.hpp"
#include "dob/observer.hpp"
#include "dob/stability.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace dob;
namespace t = dob::testing;

namespace {

DiscreteServoModel nominal() { return discretize(ContinuousServoModel::make(5e-3, 1e-2), 1e-3); }

// Gamma = shift - Lmat * inputs assembled by hand.
Eigen::MatrixXd gamma_oracle(const Eigen::MatrixXd& shift, const std::vector<Eigen::Vector2d>& L,
                             const std::vector<Eigen::Vector2d>& inputs) {
  const auto n = static_cast<Eigen::Index>(L.size());
  Eigen::MatrixXd G = shift;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) G(i, j) -= L[i].dot(inputs[j]);
  }
  return G;
}

}  // namespace

TEST(Observer, KindNames) {
  EXPECT_EQ(kind_name(parse_kind("zo")), "zo");
  EXPECT_EQ(kind_name(parse_kind("fo")), "fo");
  EXPECT_EQ(kind_name(parse_kind("hp")), "hp");
  EXPECT_EQ(kind_name(parse_kind("ho3")), "ho3");
  EXPECT_EQ(observer_dimension(parse_kind("ho3")), 4);
  EXPECT_EQ(observer_dimension(HighPerformance{}), 2);
  EXPECT_THROW(parse_kind("pid"), ValidationError);
  EXPECT_THROW(parse_kind("ho"), ValidationError);
}

TEST(Observer, ZeroOrderGammaIsOneMinusL0) {
  const auto d = nominal();
  for (double l0 : {0.1, 0.275, 1.0, 1.9, 2.1}) {
    const auto dyn = build(d, tune_zo(d, l0));
    ASSERT_EQ(dyn.dim(), 1);
    EXPECT_NEAR(dyn.Gamma(0, 0), 1.0 - l0, 1e-15);
  }
}

TEST(Observer, FirstOrderGammaMatchesOracle) {
  const auto d = nominal();
  const Eigen::Vector2d L0{120.0, -3.0}, L1{5e4, 7.0};
  Eigen::MatrixXd shift(2, 2);
  shift << 1.0, d.Ts, 0.0, 1.0;
  const auto dyn = build_fo(d, L0, L1);
  EXPECT_LT(t::relative_error(dyn.Gamma, gamma_oracle(shift, {L0, L1}, {d.D, d.D_tilde})), 1e-15);
}

TEST(Observer, HighPerformanceGammaForm) {
  const auto d = nominal();
  const auto g = hp_gains(d, -0.1, 0.3);
  const auto dyn = build(d, g);
  Eigen::Matrix2d want;
  want << 0.0, 0.2, -1.0, -0.6;
  EXPECT_LT((dyn.Gamma - want).norm(), 1e-13);
}

TEST(Observer, HighOrderTwoMatchesOracle) {
  const auto d = nominal();
  const std::vector<Eigen::Vector2d> L{{10.0, 1.0}, {200.0, -2.0}, {3e3, 0.5}};
  const double Ts = d.Ts;
  Eigen::MatrixXd shift(3, 3);
  shift << 1.0, Ts, Ts * Ts / 2.0, 0.0, 1.0, Ts, 0.0, 0.0, 1.0;
  const auto D2 = t::van_loan_input(t::continuous_A(5e-3, 1e-2), t::continuous_B(5e-3), Ts, 2);
  const auto dyn = build(d, ObserverGains{HighOrder{2}, L, {}});
  EXPECT_LT(t::relative_error(dyn.Gamma, gamma_oracle(shift, L, {d.D, d.D_tilde, D2})), 1e-12);
}

TEST(Observer, HighOrderSpecializesToZeroAndFirstOrder) {
  const auto d = nominal();
  const Eigen::Vector2d L0{50.0, 0.25}, L1{1e4, -1.0};
  const auto a = build_ho(d, ObserverGains{HighOrder{0}, {L0}, {}});
  const auto b = build_zo(d, L0);
  EXPECT_LE((a.Gamma - b.Gamma).norm(), 1e-12 * b.Gamma.norm());
  EXPECT_LE((a.Omega_x - b.Omega_x).norm(), 1e-12 * b.Omega_x.norm());
  const auto c = build_ho(d, ObserverGains{HighOrder{1}, {L0, L1}, {}});
  const auto e = build_fo(d, L0, L1);
  EXPECT_LE((c.Gamma - e.Gamma).norm(), 1e-12 * e.Gamma.norm());
  EXPECT_LE((c.Omega_u - e.Omega_u).norm(), 1e-12 * e.Omega_u.norm());
}

TEST(Observer, GainValidation) {
  EXPECT_THROW(validate(ObserverGains{FirstOrder{}, {Eigen::Vector2d{1, 1}}, {}}), ValidationError);
  EXPECT_THROW(validate(ObserverGains{ZeroOrder{}, {Eigen::Vector2d{std::nan(""), 1}}, {}}),
               ValidationError);
  EXPECT_THROW(validate(ObserverGains{HighOrder{9}, std::vector<Eigen::Vector2d>(10), {}}),
               ValidationError);
}

TEST(Observer, InitialEstimateIsZero) {
  const auto d = nominal();
  for (const ObserverKind k : {ObserverKind{FirstOrder{}}, ObserverKind{HighPerformance{}}}) {
    const auto dyn = build(d, tune(d, k, EigenSpec{{0.5, 0.6}}));
    const PlantState x0{0.4, -2.0};
    const auto z = initial_state(dyn, x0);
    EXPECT_NEAR(estimate(dyn, z, x0), 0.0, 1e-9);
  }
}

TEST(Observer, RateEstimateOnlyWhereModelled) {
  const auto d = nominal();
  const PlantState x;
  const auto zo = build(d, tune_zo(d, 0.3));
  const auto fo = build(d, tune(d, FirstOrder{}, EigenSpec{{0.5, 0.6}}));
  const auto hp = build(d, tune(d, HighPerformance{}, EigenSpec{{0.5, 0.6}}));
  EXPECT_FALSE(estimate_rate(zo, initial_state(zo, x), x).has_value());
  EXPECT_TRUE(estimate_rate(fo, initial_state(fo, x), x).has_value());
  EXPECT_FALSE(estimate_rate(hp, initial_state(hp, x), x).has_value());
}

// Property: the estimation error obeys e(k+1) = Gamma e(k) + Lambda(k) for
// any input sequence, observer kind and disturbance.
TEST(ObserverProperty, ErrorRecursionHolds) {
  t::Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const auto m = t::random_model(rng);
    const auto model = ContinuousServoModel::make(m.J, m.b);
    const auto d = discretize(model, m.Ts);
    ObserverGains g;
    switch (trial % 4) {
      case 0: g = tune_zo(d, rng.uniform(0.05, 1.9)); break;
      case 1: g = tune(d, FirstOrder{}, EigenSpec{t::random_spec(rng, 2)}); break;
      case 2: g = tune(d, HighPerformance{}, EigenSpec{t::random_spec(rng, 2)}); break;
      default:
        g = ObserverGains{HighOrder{2},
                          {d.D / d.D.squaredNorm() * 0.3, d.D_tilde / d.D_tilde.squaredNorm() * 0.01,
                           Eigen::Vector2d::Zero()},
                          {}};
    }
    const auto dyn = build(d, g);
    const DisturbanceSignal tau = SinusoidSignal{rng.uniform(0.1, 1.0), rng.uniform(0.5, 5.0), 0.4};
    PlantState x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    ObserverState z = initial_state(dyn, x);
    for (long k = 0; k < 30; ++k) {
      const double u = rng.uniform(-1.0, 1.0);
      const Eigen::Vector2d pi = exact_disturbance_increment(model, tau, k, m.Ts, 32);
      const Eigen::VectorXd e = estimation_error(dyn, z, x, tau, k);
      const Eigen::VectorXd lam = truncation_residual(dyn, tau, k, pi);
      z = observer_update(dyn, z, x, u);
      x = plant_step(d, x, u, pi);
      const Eigen::VectorXd next = estimation_error(dyn, z, x, tau, k + 1);
      const Eigen::VectorXd want = dyn.Gamma * e + lam;
      const double scale = 1.0 + z.z_hat.norm() + dyn.gain_matrix().norm() * x.vec().norm();
      EXPECT_LT((next - want).norm(), 1e-11 * scale) << "trial " << trial << " k " << k;
    }
  }
}

TEST(Observer, HighPerformanceDelayedEstimateTracksPreviousSample) {
  const auto d = nominal();
  const auto model = d.source;
  const auto dyn = build(d, tune(d, HighPerformance{}, EigenSpec{{0.3, 0.4}}));
  const auto held = sample_and_hold(RampSignal{0.5, 0.0}, d.Ts, 1.0);
  PlantState x;
  ObserverState z = initial_state(dyn, x);
  for (long k = 0; k < 200; ++k) {
    z = observer_update(dyn, z, x, 0.0);
    x = plant_step(d, x, 0.0, exact_disturbance_increment(model, held, k, d.Ts, 4));
  }
  const long k = 200;
  EXPECT_NEAR(estimate(dyn, z, x), 0.5 * k * d.Ts, 1e-9);
  EXPECT_NEAR(hp_delayed_estimate(dyn, z, x), 0.5 * (k - 1) * d.Ts, 1e-9);
}
