#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dob/linalg.hpp"
#include "dob/observer.hpp"
#include "dob/servo_model.hpp"

namespace dob {

/// Desired real eigenvalues of the estimation-error dynamics.
struct EigenSpec {
  std::vector<double> desired;
};

/// Throws ValidationError unless there are `count` finite entries with |l| < 1.
void validate(const EigenSpec& spec, size_t count);

// Gain parameterizations. Each returns gains whose free_params are {l0} or
// {l0, l1}.

/// L0 = l0 / ||D||_1 * [1, 1]. Gamma = 1 - l0 when D >= 0.
ObserverGains tune_zo(const DiscreteServoModel& nominal, double l0);
/// L_i = l_i * v with v = [6/D1, -4/D2].
ObserverGains fo_gains(const DiscreteServoModel& nominal, double l0, double l1);
/// L0 = (0.5 + l0) v, L1 = (1 + l1) v with v = [1/D1, 1/D2], giving
/// Gamma = [[0, -2 l0], [-1, -2 l1]].
ObserverGains hp_gains(const DiscreteServoModel& nominal, double l0, double l1);
/// Gains for `kind` from free parameters (ZO uses params[0] only). HO is
/// not parameterized and throws.
ObserverGains gains_from_params(const DiscreteServoModel& nominal, const ObserverKind& kind,
                                const std::vector<double>& params);

/// Matches trace and determinant of the exact FO Gamma to the spec by Newton
/// iteration. Throws ConvergenceError if the residual stays above tolerance.
ObserverGains tune_fo(const DiscreteServoModel& nominal, const EigenSpec& spec);
ObserverGains tune_hp(const DiscreteServoModel& nominal, const EigenSpec& spec);
/// FO or HP from a spec; ZO takes 1 - lambda as l0.
ObserverGains tune(const DiscreteServoModel& nominal, const ObserverKind& kind,
                   const EigenSpec& spec);

struct ConstraintCheck {
  std::string name;
  std::string expression;
  double value = 0.0;
  bool pass = false;
};

struct ZoVerdict {
  ConstraintCheck open_loop;   // 0 < l0 < 2
  ConstraintCheck inner_loop;  // 0 < alpha l0 < 2
};

ZoVerdict check_zo(double l0, double alpha);

/// Solves P - Gamma^T P Gamma = Q. Throws ValidationError if rho(Gamma) >= 1.
Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& Gamma, const Eigen::MatrixXd& Q);

struct LyapunovCertificate {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;  // P - Gamma^T P Gamma
  double kappa_e = 0.0;
  double kappa_d = 0.0;
  double d_k = 0.0;
  /// sqrt(kappa_d / kappa_e) * d_k: outside this ball V strictly decreases.
  double bound_radius = 0.0;
  /// Radius of the smallest level set of V containing the decrease ball and
  /// its one-step image. Trajectories that enter it never leave.
  double invariant_radius = 0.0;
  bool asymptotic = false;  // d_k == 0
};

/// P is scaled so that lambda_min(Q) = 2, hence kappa_e = 1. Returns nullopt
/// when rho(Gamma) >= 1.
std::optional<LyapunovCertificate> certify(const Eigen::MatrixXd& Gamma, double d_k);

struct LoopConfig {
  ContinuousServoModel plant;    // J_m, b_m
  ContinuousServoModel nominal;  // J_mn, b_mn
  double Ts = 1e-3;
  ObserverGains gains;
  double Kp = 2.5;
  double Kd = 0.25;
  /// Outer-loop gains [K1, K2] on the first two inner-loop modes. When set,
  /// closed_loop_matrix uses the modal basis instead of PD.
  std::optional<Eigen::Vector2d> K_tilde;

  double alpha() const { return nominal.inertia / plant.inertia; }
  bool friction_ratio_holds() const;
};

/// Plant with J_m = J_mn / alpha and the same friction rate as the nominal.
ContinuousServoModel plant_for_alpha(const ContinuousServoModel& nominal, double alpha);

struct InnerLoop {
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
};

/// ZO observer only. State [q, dq, zhat_0], input u_p.
InnerLoop inner_loop_matrix(const LoopConfig& cfg);

/// Any observer kind: state [q, dq, zhat], input u_p, with u = u_p + tau_hat.
struct AugmentedLoop {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
};
AugmentedLoop augmented_loop(const LoopConfig& cfg);

enum class LoopVerdict { Stable, Marginal, Unstable };
std::string to_string(LoopVerdict v);

/// Stable if all |l| < 1; Marginal if exactly one eigenvalue is within
/// kMarginalModeTolerance of 1 and the rest are inside; otherwise Unstable.
LoopVerdict classify_loop(const Eigenvalues& eig);
/// Spectral radius ignoring a single structural unit mode.
double non_marginal_radius(const Eigenvalues& eig);

/// Eigenvectors of the ZO inner loop for the modes {1, e^{-b Ts}, 1 - alpha l0}
/// in that order, each scaled so its last entry is 1 (unit norm if that entry
/// vanishes). nullopt when the modes are not distinct, not real, or the basis
/// is too ill-conditioned; `note` then says why.
struct ModalBasis {
  Eigen::Matrix3d S;
  Eigen::Vector3d modes;
  double condition = 0.0;
};
std::optional<ModalBasis> inner_loop_modal_basis(const LoopConfig& cfg, std::string* note);

struct ClosedLoop {
  Eigen::Matrix3d A;
  Eigen::RowVector3d K;  // original coordinates, u_p = -K xi (+ reference term)
  Eigenvalues eigenvalues;
  bool modal_gains = false;
  /// 1 - alpha l0 and the distance of the nearest closed-loop eigenvalue.
  double fixed_mode = 0.0;
  double fixed_mode_error = 0.0;
  std::vector<std::string> notes;
};

/// ZO inner loop closed by the outer controller. With K_tilde the gains are
/// K = [K1, K2, 0] S^{-1}; without it (or when the modal basis is rejected)
/// PD gains K = [Kp, Kd, 0] are used.
ClosedLoop closed_loop_matrix(const LoopConfig& cfg);

enum class SweepMode { Observer, InnerLoop, ClosedLoop };
std::string to_string(SweepMode m);
SweepMode parse_sweep_mode(const std::string& s);

struct SweepTemplate {
  LoopConfig loop;
  ObserverKind kind = ZeroOrder{};
  double l0 = 0.25;
  double l1 = 0.0;
  SweepMode mode = SweepMode::Observer;
};

struct SweepRow {
  double value = 0.0;
  double spectral_radius = 0.0;
  LoopVerdict verdict = LoopVerdict::Unstable;
};

/// param is one of l0, l1, alpha, Ts, K1, K2, Kp, Kd. Rows are sorted by
/// value; evaluation may use `threads` workers without changing the result.
std::vector<SweepRow> sweep_stability(const SweepTemplate& tmpl, const std::string& param,
                                      std::vector<double> values, int threads = 1);

struct InnerLoopReport {
  double alpha = 1.0;
  Eigenvalues eigenvalues;
  LoopVerdict verdict = LoopVerdict::Unstable;
};

struct StabilityReport {
  ObserverGains gains;
  Eigen::MatrixXd Gamma;
  Eigenvalues observer_eigenvalues;
  double spectral_radius = 0.0;
  bool open_loop_pass = false;
  std::optional<InnerLoopReport> inner_loop;
  std::optional<LyapunovCertificate> certificate;
  std::vector<ConstraintCheck> constraints;
  std::vector<std::string> notes;

  bool pass() const;
};

/// Observer constraints, optional inner-loop constraints, and a certificate
/// for disturbance-increment bound d_k.
StabilityReport analyze_observer(const LoopConfig& cfg, bool inner_loop, double d_k = 0.0);

}  // namespace dob
