#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "dob/disturbance.hpp"
#include "dob/observer.hpp"
#include "dob/servo_model.hpp"
#include "dob/stability.hpp"
#include "dob/tolerances.hpp"

namespace dob {

struct ZeroReference {};
struct StepReference {
  double amplitude = 0.0;  // rad
  double t_on = 0.0;
};
/// amplitude * sin(2 pi f (t - t_on)) on [t_on, t_off], zero elsewhere.
struct SinusoidReference {
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double t_on = 0.0;
  double t_off = 0.0;
};
using ReferenceSignal = std::variant<ZeroReference, StepReference, SinusoidReference>;

double eval_reference(const ReferenceSignal& r, double t);
/// d/dt of the reference away from jumps (0 for steps, right limit at t_on).
double eval_reference_rate(const ReferenceSignal& r, double t);
void validate(const ReferenceSignal& r);

/// How the observer gains are obtained.
struct ObserverSetup {
  enum class Source { FreeParams, Eigenvalues, Explicit };
  ObserverKind kind = ZeroOrder{};
  Source source = Source::FreeParams;
  std::vector<double> values;           // free params or desired eigenvalues
  std::vector<Eigen::Vector2d> gains;   // Source::Explicit
};

ObserverGains resolve_gains(const ObserverSetup& setup, const DiscreteServoModel& nominal);

enum class OuterLoop { PD, StateFeedback };

struct ScenarioConfig {
  std::string name;
  ContinuousServoModel plant = ContinuousServoModel::make(5e-3, 1e-2);
  ContinuousServoModel nominal = ContinuousServoModel::make(5e-3, 1e-2);
  double Ts = 1e-3;
  double Kp = 2.5;
  double Kd = 0.25;
  OuterLoop outer = OuterLoop::PD;
  Eigen::Vector2d K_tilde = Eigen::Vector2d::Zero();  // StateFeedback only
  std::optional<ObserverSetup> observer;  // none: PD only
  /// Feed tau_hat back (u = u_p + tau_hat). Off runs the observer open loop.
  bool disturbance_feedback = true;
  ReferenceSignal reference = ZeroReference{};
  DisturbanceSignal disturbance = ZeroSignal{};
  /// When set, the plant receives the disturbance sampled every Ts and held,
  /// as a digitally commanded load motor would apply it.
  std::optional<Hold> disturbance_hold;
  double duration = 1.0;
  std::optional<int> encoder_counts;
  int substeps = tol::kDefaultSubsteps;
  bool allow_unstable = false;
  PlantState initial;
  /// Load-motor torque gain of the test rig. Recorded, never used.
  double torque_gain = 0.1;
};

/// Throws ValidationError for inconsistent settings.
void validate(const ScenarioConfig& cfg);

/// Number of sampling intervals; rows k = 0..steps.
long scenario_steps(const ScenarioConfig& cfg);

/// Stability constraints that gate run_closed_loop.
StabilityReport scenario_stability(const ScenarioConfig& cfg);

struct SimulationTrace {
  std::vector<long> k;
  std::vector<double> t, q, dq, q_ref, u_p, u, tau_d, tau_hat, est_error, tracking_error;
  std::vector<double> tau_hat_dot;  // empty unless the observer has a rate estimate
  std::vector<double> tau_d_dot;    // true rate, filled with tau_hat_dot
  bool diverged = false;
  long diverged_at = -1;

  size_t size() const { return t.size(); }
};

/// Per step: measure, estimate, control, observer update, plant update.
/// PD acts on the error and its rate: u_p = Kp (q_ref - q) + Kd (dq_ref - dq).
/// Throws ConstraintViolation when the configuration fails its stability
/// checks and allow_unstable is off.
SimulationTrace run_closed_loop(const ScenarioConfig& cfg);

struct MetricWindows {
  double track_begin = 0.0;
  double track_end = 1e300;
  double est_begin = 0.0;
  double est_end = 1e300;
};

struct Metrics {
  double rms_tracking = 0.0;
  double steady_state_error = 0.0;  // mean |e| over the last 10% of the tracking window
  double rms_est_error = 0.0;
  double peak_est_error = 0.0;
  std::optional<double> rms_rate_error;  // tau_hat_dot vs true rate, est window
  std::optional<double> rms_rate;
  bool diverged = false;
};

/// Throws ValidationError if a window holds no samples.
Metrics compute_metrics(const SimulationTrace& trace, const MetricWindows& w);

struct OrderStudyKind {
  std::string label;
  ObserverSetup setup;
};

struct OrderStudyOptions {
  std::vector<double> Ts;
  std::vector<OrderStudyKind> kinds;
  /// Overrides the template's disturbance_hold for every run.
  std::optional<Hold> hold;
  /// Peak |est_error| is taken over [window_begin, duration].
  double window_begin = 0.0;
  int threads = 1;
};

struct OrderStudyRow {
  std::string label;
  std::vector<double> Ts;
  std::vector<double> peak_error;
  std::optional<double> slope;  // none when every error is below 1e-8
  std::vector<std::string> notes;
};

/// Least-squares log-log slope of peak estimation error versus Ts, one row
/// per kind. Divergent runs are dropped with a note; fewer than three valid
/// points throws ValidationError.
std::vector<OrderStudyRow> order_study(const ScenarioConfig& tmpl, const OrderStudyOptions& opt);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Runs each config (threads workers), results in input order.
std::vector<SimulationTrace> run_batch(const std::vector<ScenarioConfig>& cfgs, int threads = 1);

}  // namespace dob
