#pragma once

#include <Eigen/Core>

#include "dob/disturbance.hpp"

namespace dob {

/// Rigid servo axis: J * ddq = u - b_visc * dq - tau_d.
struct ContinuousServoModel {
  double inertia = 1.0;            // J, kg m^2
  double viscous_friction = 0.0;   // b_visc, N m s / rad

  /// Throws ValidationError unless J > 0, b_visc >= 0 and both are finite.
  static ContinuousServoModel make(double inertia, double viscous_friction);

  /// b = b_visc / J, the pole of the velocity dynamics.
  double friction_rate() const { return viscous_friction / inertia; }

  /// [[0, 1], [0, -b]]. The friction pole is stable (see README).
  Eigen::Matrix2d state_matrix() const;
  /// [0, 1/J]; control and disturbance share it.
  Eigen::Vector2d input_vector() const;
};

/// Zero-order-hold discretization of a ContinuousServoModel.
struct DiscreteServoModel {
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  Eigen::Vector2d B = Eigen::Vector2d::Zero();
  Eigen::Vector2d D = Eigen::Vector2d::Zero();        // zero-order disturbance input
  Eigen::Vector2d D_tilde = Eigen::Vector2d::Zero();  // first-order disturbance input
  double Ts = 0.0;
  ContinuousServoModel source;
};

struct PlantState {
  double q = 0.0;   // rad
  double dq = 0.0;  // rad/s

  Eigen::Vector2d vec() const { return {q, dq}; }
  static PlantState from(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
};

/// phi_k(z) = sum_{n>=0} z^n / (n+k)!, so phi_0 = e^z and
/// phi_{k+1}(z) = (phi_k(z) - 1/k!) / z. Accurate for all z <= 0.
double phi_function(int k, double z);

/// Exact ZOH matrices. Throws ValidationError for Ts <= 0 or non-finite output.
DiscreteServoModel discretize(const ContinuousServoModel& model, double Ts);

/// D^(i) = int_0^Ts e^{A_c s} (Ts - s)^i / i! ds * D_c. D^(0) = D, D^(1) = D~.
Eigen::Vector2d disturbance_input_vector(const ContinuousServoModel& model,
                                         double Ts, int order);

/// x+ = A x + B u - pi. The disturbance enters with a minus sign.
PlantState plant_step(const DiscreteServoModel& d, const PlantState& x,
                      double u, const Eigen::Vector2d& pi);

/// Ground-truth disturbance increment
///   Pi(k) = int_0^Ts e^{A_c s} D_c tau_d((k+1) Ts - s) ds
/// by composite Simpson with `substeps` panels on every smooth piece of the
/// signal inside the sampling interval.
Eigen::Vector2d exact_disturbance_increment(const ContinuousServoModel& model,
                                            const DisturbanceSignal& signal,
                                            long k, double Ts, int substeps);

}  // namespace dob
