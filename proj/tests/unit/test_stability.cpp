#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dob/errors.hpp"
#include "dob/linalg.hpp"
#include "dob/stability.hpp"
#include "generators.hpp"

using namespace dob;
namespace t = dob::testing;

namespace {

DiscreteServoModel nominal() { return discretize(ContinuousServoModel::make(5e-3, 1e-2), 1e-3); }

LoopConfig zo_loop(double l0, double alpha) {
  LoopConfig cfg;
  cfg.nominal = ContinuousServoModel::make(5e-3, 1e-2);
  cfg.plant = plant_for_alpha(cfg.nominal, alpha);
  cfg.Ts = 1e-3;
  cfg.gains = tune_zo(discretize(cfg.nominal, cfg.Ts), l0);
  return cfg;
}

std::vector<double> sorted_real(const Eigenvalues& e) {
  std::vector<double> r;
  for (const auto& v : e) r.push_back(v.real());
  std::sort(r.begin(), r.end());
  return r;
}

double max_imag(const Eigenvalues& e) {
  double m = 0.0;
  for (const auto& v : e) m = std::max(m, std::abs(v.imag()));
  return m;
}

// Largest |e| reached from starts on the circle of radius r when every step
// picks the disturbance of norm d that maximizes e^T P e.
double worst_excursion(const Eigen::Matrix2d& G, const Eigen::Matrix2d& P, double d, double r,
                       int starts) {
  double worst = 0.0;
  for (int s = 0; s < starts; ++s) {
    const double a = 2.0 * std::numbers::pi * s / starts;
    Eigen::Vector2d e = r * Eigen::Vector2d{std::cos(a), std::sin(a)};
    for (int k = 0; k < 400; ++k) {
      Eigen::Vector2d best = G * e;
      double best_v = -1.0;
      for (int j = 0; j < 72; ++j) {
        const double b = 2.0 * std::numbers::pi * j / 72;
        const Eigen::Vector2d cand = G * e + d * Eigen::Vector2d{std::cos(b), std::sin(b)};
        const double v = cand.dot(P * cand);
        if (v > best_v) {
          best_v = v;
          best = cand;
        }
      }
      e = best;
      worst = std::max(worst, e.norm());
    }
  }
  return worst;
}

}  // namespace

TEST(Tuning, ZeroOrderDefinition) {
  const auto d = nominal();
  const auto g = tune_zo(d, 0.3);
  ASSERT_EQ(g.L.size(), 1u);
  EXPECT_DOUBLE_EQ(g.L[0](0), g.L[0](1));
  EXPECT_NEAR(g.L[0].dot(d.D), 0.3, 1e-15);
  EXPECT_THROW(tune_zo(d, std::nan("")), ValidationError);
}

TEST(Tuning, HighPerformanceClosedForm) {
  // Desired {0.5, 0.25}: trace 0.75 = -2 l1, det 0.125 = -2 l0.
  const auto g = tune(nominal(), HighPerformance{}, EigenSpec{{0.5, 0.25}});
  ASSERT_EQ(g.free_params.size(), 2u);
  EXPECT_NEAR(g.free_params[0], -0.0625, 1e-15);
  EXPECT_NEAR(g.free_params[1], -0.375, 1e-15);
  const auto dyn = build(nominal(), g);
  const auto e = sorted_real(eigenvalues(dyn.Gamma));
  EXPECT_NEAR(e[0], 0.25, 1e-12);
  EXPECT_NEAR(e[1], 0.5, 1e-12);
}

TEST(Tuning, RejectsBadSpecs) {
  const auto d = nominal();
  EXPECT_THROW(tune(d, FirstOrder{}, EigenSpec{{0.5}}), ValidationError);
  EXPECT_THROW(tune(d, FirstOrder{}, EigenSpec{{0.5, 1.0}}), ValidationError);
  EXPECT_THROW(tune(d, HighPerformance{}, EigenSpec{{0.5, -1.2}}), ValidationError);
  EXPECT_THROW(tune(d, HighOrder{2}, EigenSpec{{0.1, 0.2, 0.3}}), ValidationError);
  EXPECT_THROW(gains_from_params(d, HighOrder{1}, {0.1, 0.2}), ValidationError);
}

// Property: eigenvalue tuning places the spectrum for any model and spec.
TEST(TuningProperty, PlacesRequestedEigenvalues) {
  t::Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    const double J = rng.log_uniform(1e-3, 1.0);
    const double b = rng.log_uniform(1e-3, 1e2) * J;
    const double Ts = rng.log_uniform(1e-4, 5e-3);
    const auto d = discretize(ContinuousServoModel::make(J, b), Ts);
    const auto spec = t::random_spec(rng, 2, 0.01);
    std::vector<double> want = spec;
    std::sort(want.begin(), want.end());
    for (const ObserverKind k : {ObserverKind{FirstOrder{}}, ObserverKind{HighPerformance{}}}) {
      const auto dyn = build(d, tune(d, k, EigenSpec{spec}));
      const auto e = eigenvalues(dyn.Gamma);
      ASSERT_LT(max_imag(e), 1e-6) << kind_name(k) << " " << i;
      const auto got = sorted_real(e);
      EXPECT_NEAR(got[0], want[0], 1e-9) << kind_name(k) << " " << i;
      EXPECT_NEAR(got[1], want[1], 1e-9) << kind_name(k) << " " << i;
    }
  }
}

TEST(ZoCheck, OpenAndInnerLoopIntervals) {
  EXPECT_TRUE(check_zo(1.9, 1.0).open_loop.pass);
  EXPECT_FALSE(check_zo(2.1, 1.0).open_loop.pass);
  EXPECT_FALSE(check_zo(0.0, 1.0).open_loop.pass);
  EXPECT_TRUE(check_zo(0.45, 4.0).inner_loop.pass);
  EXPECT_FALSE(check_zo(0.55, 4.0).inner_loop.pass);
  EXPECT_THROW(check_zo(0.5, 0.0), ValidationError);
}

// Property: the Lyapunov solution satisfies its equation in dimensions 1..4.
TEST(LyapunovProperty, ResidualIsSmall) {
  t::Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + i % 4;
    const auto G = t::random_matrix(rng, n, rng.uniform(0.05, 0.97));
    Eigen::MatrixXd R = Eigen::MatrixXd::Random(n, n);
    const Eigen::MatrixXd Q = R * R.transpose() + Eigen::MatrixXd::Identity(n, n);
    const auto P = solve_discrete_lyapunov(G, Q);
    const Eigen::MatrixXd res = P - G.transpose() * P * G - Q;
    EXPECT_LT(res.norm(), 1e-10 * P.norm()) << i;
    EXPECT_LT((P - P.transpose()).norm(), 1e-12 * P.norm());
  }
  EXPECT_THROW(solve_discrete_lyapunov(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)),
               ValidationError);
}

TEST(Certificate, NormalizationAndRejection) {
  Eigen::Matrix2d G;
  G << 0.5, 0.2, -0.1, 0.3;
  const auto c = certify(G, 0.01);
  ASSERT_TRUE(c.has_value());
  EXPECT_DOUBLE_EQ(c->kappa_e, 1.0);
  EXPECT_NEAR(min_symmetric_eigenvalue(c->Q), 2.0, 1e-12);
  EXPECT_NEAR(c->bound_radius, std::sqrt(c->kappa_d) * 0.01, 1e-15);
  EXPECT_GE(c->invariant_radius, c->bound_radius);
  EXPECT_FALSE(c->asymptotic);
  EXPECT_TRUE(certify(G, 0.0)->asymptotic);
  EXPECT_FALSE(certify(Eigen::Matrix2d::Identity(), 0.1).has_value());
  EXPECT_THROW(certify(G, -1.0), ValidationError);
}

TEST(Certificate, ScalarArithmetic) {
  // P0 (1 - 0.25) = 1 gives P0 = 4/3 and Q0 = 1; scaling to Q = 2 gives
  // P = 8/3, so kappa_d = (0.5 * 8/3)^2 + 8/3 = 40/9.
  Eigen::MatrixXd G(1, 1);
  G << 0.5;
  const auto c = certify(G, 1.0);
  ASSERT_TRUE(c.has_value());
  EXPECT_NEAR(c->P(0, 0), 8.0 / 3.0, 1e-14);
  EXPECT_NEAR(c->Q(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(c->kappa_d, 40.0 / 9.0, 1e-13);
  EXPECT_NEAR(c->bound_radius, std::sqrt(40.0 / 9.0), 1e-14);
  // The exact steady error under the constant worst case is d / (1 - 0.5).
  EXPECT_GE(c->bound_radius, 2.0);
  EXPECT_EQ(certify(G, 0.0)->bound_radius, 0.0);
}

// Property: trajectories driven by the worst admissible disturbance that
// start inside the decrease ball stay inside the invariant radius.
TEST(CertificateProperty, InvariantRadiusIsSound) {
  t::Rng rng(43);
  for (int i = 0; i < 60; ++i) {
    const Eigen::Matrix2d G = t::random_matrix(rng, 2, rng.uniform(0.1, 0.95));
    const double d = 1.0;
    const auto c = certify(G, d);
    ASSERT_TRUE(c.has_value());
    const Eigen::Matrix2d P = c->P;
    const double worst = worst_excursion(G, P, d, c->bound_radius, 16);
    EXPECT_LE(worst, c->invariant_radius * (1.0 + 1e-9)) << i;
  }
}

// The decrease-ball radius alone is not an invariant bound: for this
// rotation-like Gamma the adversarial trajectory leaves it. The invariant
// radius still holds.
TEST(Certificate, BoundRadiusCanBeExceededByRotations) {
  Eigen::Matrix2d G;
  G << -0.71500774487596586, -0.90024502021103836, 1.5349729471537104, 0.74088896727892206;
  const auto c = certify(G, 1.0);
  ASSERT_TRUE(c.has_value());
  Eigen::Vector2d e = Eigen::Vector2d::Zero();
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    Eigen::Vector2d best = G * e;
    double best_v = -1.0;
    for (int j = 0; j < 360; ++j) {
      const double b = 2.0 * std::numbers::pi * j / 360;
      const Eigen::Vector2d cand = G * e + Eigen::Vector2d{std::cos(b), std::sin(b)};
      const double v = cand.dot(c->P * cand);
      if (v > best_v) {
        best_v = v;
        best = cand;
      }
    }
    e = best;
    worst = std::max(worst, e.norm());
  }
  EXPECT_GT(worst, c->bound_radius);
  EXPECT_LE(worst, c->invariant_radius);
}

TEST(InnerLoop, EigenvaluesAreUnitFrictionAndObserverModes) {
  for (double alpha : {0.5, 1.0, 2.0, 4.0}) {
    const auto cfg = zo_loop(0.3, alpha);
    const auto il = inner_loop_matrix(cfg);
    const auto got = sorted_real(eigenvalues(il.A));
    std::vector<double> want{1.0, std::exp(-2.0 * 1e-3), 1.0 - alpha * 0.3};
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << alpha;
    const auto aug = augmented_loop(cfg);
    EXPECT_LT((aug.A - Eigen::MatrixXd(il.A)).norm(), 1e-12 * il.A.norm());
  }
}

TEST(InnerLoop, ClassifiesStructuralUnitMode) {
  EXPECT_EQ(classify_loop(eigenvalues(inner_loop_matrix(zo_loop(0.3, 1.0)).A)), LoopVerdict::Marginal);
  EXPECT_EQ(classify_loop(eigenvalues(inner_loop_matrix(zo_loop(0.6, 4.0)).A)), LoopVerdict::Unstable);
  EXPECT_EQ(classify_loop({{0.5, 0.0}, {0.2, 0.1}}), LoopVerdict::Stable);
  EXPECT_NEAR(non_marginal_radius({{1.0, 0.0}, {0.5, 0.0}}), 0.5, 1e-15);
}

TEST(ClosedLoop, PdKeepsObserverModeOnlyForMatchedInertia) {
  auto matched = closed_loop_matrix(zo_loop(0.3, 1.0));
  EXPECT_FALSE(matched.modal_gains);
  EXPECT_LT(matched.fixed_mode_error, 1e-9);
  auto mismatched = closed_loop_matrix(zo_loop(0.1, 4.0));
  EXPECT_GT(mismatched.fixed_mode_error, 1e-3);
}

TEST(ClosedLoop, ModalGainsKeepObserverModeFixed) {
  auto cfg = zo_loop(0.1, 4.0);
  cfg.K_tilde = Eigen::Vector2d{2.5, 0.25};
  const auto cl = closed_loop_matrix(cfg);
  ASSERT_TRUE(cl.modal_gains);
  EXPECT_NEAR(cl.fixed_mode, 0.6, 1e-15);
  EXPECT_LT(cl.fixed_mode_error, 1e-9);
}

TEST(Sweep, SortedThreadInvariantAndValidated) {
  SweepTemplate tmpl;
  tmpl.loop = zo_loop(0.3, 1.0);
  tmpl.mode = SweepMode::Observer;
  const std::vector<double> values{2.1, 0.5, 1.9, 1.0, 0.1};
  const auto one = sweep_stability(tmpl, "l0", values, 1);
  const auto four = sweep_stability(tmpl, "l0", values, 4);
  ASSERT_EQ(one.size(), values.size());
  for (size_t i = 0; i + 1 < one.size(); ++i) EXPECT_LT(one[i].value, one[i + 1].value);
  for (size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].value, four[i].value);
    EXPECT_EQ(one[i].spectral_radius, four[i].spectral_radius);
  }
  EXPECT_EQ(one.front().verdict, LoopVerdict::Stable);
  EXPECT_EQ(one.back().verdict, LoopVerdict::Unstable);
  EXPECT_THROW(sweep_stability(tmpl, "gain", values), ValidationError);
  EXPECT_EQ(parse_sweep_mode(to_string(SweepMode::ClosedLoop)), SweepMode::ClosedLoop);
  EXPECT_THROW(parse_sweep_mode("open"), ValidationError);
}

TEST(Analyze, ReportsConstraintsAndCertificate) {
  const auto ok = analyze_observer(zo_loop(0.3, 1.0), true, 1e-3);
  EXPECT_TRUE(ok.pass());
  EXPECT_TRUE(ok.open_loop_pass);
  ASSERT_TRUE(ok.inner_loop.has_value());
  ASSERT_TRUE(ok.certificate.has_value());
  EXPECT_NEAR(ok.spectral_radius, 0.7, 1e-12);

  const auto bad = analyze_observer(zo_loop(2.1, 1.0), false);
  EXPECT_FALSE(bad.pass());
  EXPECT_FALSE(bad.certificate.has_value());

  const auto inner = analyze_observer(zo_loop(0.6, 4.0), true);
  EXPECT_TRUE(inner.open_loop_pass);
  EXPECT_FALSE(inner.pass());
}
