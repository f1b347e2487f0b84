#include "dob/servo_model.hpp"

#include <cmath>

#include "dob/errors.hpp"
#include "dob/tolerances.hpp"

namespace dob {
namespace {

double inv_factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return 1.0 / f;
}

void check_model(const ContinuousServoModel& m) {
  if (!std::isfinite(m.inertia) || !(m.inertia > 0.0)) {
    throw ValidationError("inertia must be finite and positive");
  }
  if (!std::isfinite(m.viscous_friction) || m.viscous_friction < 0.0) {
    throw ValidationError("viscous friction must be finite and non-negative");
  }
}

void check_step(double Ts) {
  if (!std::isfinite(Ts) || !(Ts > 0.0)) {
    throw ValidationError("sampling time must be finite and positive");
  }
}

// e^{A_c s} D_c
Eigen::Vector2d kernel(double b, double inv_j, double s) {
  const double z = -b * s;
  return {s * phi_function(1, z) * inv_j, std::exp(z) * inv_j};
}

}  // namespace

ContinuousServoModel ContinuousServoModel::make(double inertia,
                                                double viscous_friction) {
  ContinuousServoModel m{inertia, viscous_friction};
  check_model(m);
  return m;
}

Eigen::Matrix2d ContinuousServoModel::state_matrix() const {
  Eigen::Matrix2d a;
  a << 0.0, 1.0, 0.0, -friction_rate();
  return a;
}

Eigen::Vector2d ContinuousServoModel::input_vector() const {
  return {0.0, 1.0 / inertia};
}

double phi_function(int k, double z) {
  if (k < 0) throw ValidationError("phi_function needs k >= 0");
  if (!std::isfinite(z)) throw ValidationError("phi_function needs finite z");
  if (std::abs(z) < tol::kSmallFrictionSwitch) {
    return inv_factorial(k) + z * inv_factorial(k + 1);
  }
  if (std::abs(z) <= 1.0) {
    double term = inv_factorial(k);
    double sum = term;
    for (int n = 1; n < 60; ++n) {
      term *= z / (n + k);
      const double next = sum + term;
      if (next == sum) break;
      sum = next;
    }
    return sum;
  }
  double p = std::exp(z);
  for (int j = 0; j < k; ++j) p = (p - inv_factorial(j)) / z;
  return p;
}

Eigen::Vector2d disturbance_input_vector(const ContinuousServoModel& model,
                                         double Ts, int order) {
  check_model(model);
  check_step(Ts);
  if (order < 0) throw ValidationError("disturbance input order must be >= 0");
  const double z = -model.friction_rate() * Ts;
  Eigen::Vector2d d{std::pow(Ts, order + 2) * phi_function(order + 2, z),
                    std::pow(Ts, order + 1) * phi_function(order + 1, z)};
  d /= model.inertia;
  if (!d.allFinite()) throw ValidationError("disturbance input is not finite");
  return d;
}

DiscreteServoModel discretize(const ContinuousServoModel& model, double Ts) {
  check_model(model);
  check_step(Ts);
  const double z = -model.friction_rate() * Ts;
  DiscreteServoModel d;
  d.A << 1.0, Ts * phi_function(1, z), 0.0, std::exp(z);
  d.B = disturbance_input_vector(model, Ts, 0);
  d.D = d.B;
  d.D_tilde = disturbance_input_vector(model, Ts, 1);
  d.Ts = Ts;
  d.source = model;
  if (!d.A.allFinite()) throw ValidationError("discretized model is not finite");
  return d;
}

PlantState plant_step(const DiscreteServoModel& d, const PlantState& x, double u,
                      const Eigen::Vector2d& pi) {
  return PlantState::from(d.A * x.vec() + d.B * u - pi);
}

Eigen::Vector2d exact_disturbance_increment(const ContinuousServoModel& model,
                                            const DisturbanceSignal& signal,
                                            long k, double Ts, int substeps) {
  if (substeps < 1) throw ValidationError("substeps must be >= 1");
  const double b = model.friction_rate();
  const double inv_j = 1.0 / model.inertia;
  const double t_lo = static_cast<double>(k) * Ts;
  const double t_hi = static_cast<double>(k + 1) * Ts;

  std::vector<double> cuts{t_lo};
  for (double t : breakpoints(signal, t_lo, t_hi)) cuts.push_back(t);
  cuts.push_back(t_hi);

  // Integrate over absolute time t, lag s = t_hi - t.
  auto integrand = [&](double t, Limit limit) -> Eigen::Vector2d {
    return kernel(b, inv_j, t_hi - t) * eval_disturbance(signal, t, limit);
  };

  Eigen::Vector2d total = Eigen::Vector2d::Zero();
  const int n = 2 * substeps;
  for (size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double a = cuts[p];
    const double c = cuts[p + 1];
    const double h = (c - a) / n;
    if (!(h > 0.0)) continue;
    Eigen::Vector2d sum =
        integrand(a, Limit::FromRight) + integrand(c, Limit::FromLeft);
    for (int i = 1; i < n; ++i) {
      sum += (i % 2 == 1 ? 4.0 : 2.0) * integrand(a + i * h, Limit::Point);
    }
    total += sum * (h / 3.0);
  }
  return total;
}

}  // namespace dob
