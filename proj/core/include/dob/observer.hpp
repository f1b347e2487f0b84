#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "dob/disturbance.hpp"
#include "dob/servo_model.hpp"

namespace dob {

struct ZeroOrder {};
struct FirstOrder {};
struct HighOrder {
  int order = 0;
};
/// Backward/forward difference observer; no derivative states.
struct HighPerformance {};

using ObserverKind = std::variant<ZeroOrder, FirstOrder, HighOrder, HighPerformance>;

/// Number of auxiliary variables (m + 1 for an m-th order model, 2 for HP).
int observer_dimension(const ObserverKind& kind);
/// "zo", "fo", "ho<m>", "hp".
std::string kind_name(const ObserverKind& kind);
/// Inverse of kind_name. Throws ValidationError.
ObserverKind parse_kind(const std::string& name);

struct ObserverGains {
  ObserverKind kind = ZeroOrder{};
  std::vector<Eigen::Vector2d> L;
  std::vector<double> free_params;
};

/// Throws ValidationError when L has the wrong length, entries are not
/// finite, or a high-order model exceeds tol::kMaxObserverOrder.
void validate(const ObserverGains& gains);

/// zhat(k+1) = Gamma zhat(k) + Omega_x x(k) + Omega_u u(k).
///
/// The auxiliary variables are z = T + Lmat x, where T collects the modelled
/// disturbance quantities (derivatives for ZO/FO/HO, the samples
/// [tau(k-1), tau(k)] for HP). `shift` propagates T one step and the plant
/// sees x+ = A x + B u - inputs * T.
struct AuxiliaryDynamics {
  Eigen::MatrixXd Gamma;
  Eigen::MatrixXd Omega_x;  // dim x 2
  Eigen::VectorXd Omega_u;
  ObserverGains gains;
  DiscreteServoModel nominal;
  Eigen::MatrixXd shift;
  Eigen::MatrixXd inputs;  // 2 x dim

  int dim() const { return static_cast<int>(Gamma.rows()); }
  /// Rows L_i^T.
  Eigen::MatrixXd gain_matrix() const;
};

struct ObserverState {
  Eigen::VectorXd z_hat;
};

AuxiliaryDynamics build_zo(const DiscreteServoModel& nominal, const Eigen::Vector2d& L0);
AuxiliaryDynamics build_fo(const DiscreteServoModel& nominal, const Eigen::Vector2d& L0,
                           const Eigen::Vector2d& L1);
AuxiliaryDynamics build_hp(const DiscreteServoModel& nominal, const Eigen::Vector2d& L0,
                           const Eigen::Vector2d& L1);
AuxiliaryDynamics build_ho(const DiscreteServoModel& nominal, const ObserverGains& gains);
/// Dispatches on gains.kind.
AuxiliaryDynamics build(const DiscreteServoModel& nominal, const ObserverGains& gains);

/// z_i(0) = L_i^T x(0): the reconstructed estimate starts at exactly zero.
ObserverState initial_state(const AuxiliaryDynamics& dyn, const PlantState& x0);

ObserverState observer_update(const AuxiliaryDynamics& dyn, const ObserverState& s,
                              const PlantState& x, double u);

/// ZO/FO/HO: [tau, tau', ..., tau^(m)] estimates. HP: the single estimate of
/// tau(k).
Eigen::VectorXd reconstruct(const AuxiliaryDynamics& dyn, const ObserverState& s,
                            const PlantState& x);

/// The disturbance estimate fed back in the inner loop.
double estimate(const AuxiliaryDynamics& dyn, const ObserverState& s, const PlantState& x);

/// First-derivative estimate, when the observer carries one (FO, HO m >= 1).
std::optional<double> estimate_rate(const AuxiliaryDynamics& dyn, const ObserverState& s,
                                    const PlantState& x);

/// HP only: z_0 - L_0^T x, the estimate of the previous sample tau(k-1).
double hp_delayed_estimate(const AuxiliaryDynamics& dyn, const ObserverState& s,
                           const PlantState& x);

// Diagnostics against a known disturbance. Not used by the observer itself.

/// T(k) for the signal at t = k Ts.
Eigen::VectorXd true_auxiliary_disturbance(const AuxiliaryDynamics& dyn,
                                           const DisturbanceSignal& signal, long k);

/// e_z(k) = T(k) + Lmat x(k) - zhat(k).
Eigen::VectorXd estimation_error(const AuxiliaryDynamics& dyn, const ObserverState& s,
                                 const PlantState& x, const DisturbanceSignal& signal,
                                 long k);

/// Lambda(k) such that e_z(k+1) = Gamma e_z(k) + Lambda(k) when the plant is
/// the nominal model driven by the increment `pi`:
///   Lambda = T(k+1) - shift T(k) + Lmat (inputs T(k) - pi).
/// The last term vanishes when the observer's disturbance model is exact.
Eigen::VectorXd truncation_residual(const AuxiliaryDynamics& dyn,
                                    const DisturbanceSignal& signal, long k,
                                    const Eigen::Vector2d& pi);

}  // namespace dob
