#include "dob/observer.hpp"

#include <cmath>
#include <string>

#include "dob/errors.hpp"
#include "dob/tolerances.hpp"

namespace dob {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool is_hp(const ObserverKind& k) { return std::holds_alternative<HighPerformance>(k); }

// Collects Gamma, Omega_x, Omega_u from the disturbance model (shift, inputs)
// and the gain rows.
AuxiliaryDynamics assemble(const DiscreteServoModel& nominal, ObserverGains gains,
                           Eigen::MatrixXd shift, Eigen::MatrixXd inputs) {
  validate(gains);
  AuxiliaryDynamics dyn;
  dyn.gains = std::move(gains);
  dyn.nominal = nominal;
  dyn.shift = std::move(shift);
  dyn.inputs = std::move(inputs);
  const Eigen::MatrixXd Lm = dyn.gain_matrix();
  dyn.Gamma = dyn.shift - Lm * dyn.inputs;
  dyn.Omega_x = Lm * nominal.A - dyn.Gamma * Lm;
  dyn.Omega_u = Lm * nominal.B;
  if (!dyn.Gamma.allFinite() || !dyn.Omega_x.allFinite() || !dyn.Omega_u.allFinite()) {
    throw ValidationError("observer matrices are not finite");
  }
  return dyn;
}

void check_nominal(const DiscreteServoModel& nominal) {
  if (!(nominal.Ts > 0.0) || !std::isfinite(nominal.Ts)) {
    throw ValidationError("nominal model has no valid sampling time");
  }
}

Eigen::MatrixXd taylor_shift(int dim, double Ts) {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    double term = 1.0;
    for (int j = i; j < dim; ++j) {
      phi(i, j) = term;
      term *= Ts / (j - i + 1);
    }
  }
  return phi;
}

void check_state(const AuxiliaryDynamics& dyn, const ObserverState& s) {
  if (s.z_hat.size() != dyn.dim()) {
    throw ValidationError("observer state dimension does not match its dynamics");
  }
}

}  // namespace

int observer_dimension(const ObserverKind& kind) {
  return std::visit(Overloaded{
                        [](const ZeroOrder&) { return 1; },
                        [](const FirstOrder&) { return 2; },
                        [](const HighOrder& h) { return h.order + 1; },
                        [](const HighPerformance&) { return 2; },
                    },
                    kind);
}

std::string kind_name(const ObserverKind& kind) {
  return std::visit(Overloaded{
                        [](const ZeroOrder&) { return std::string("zo"); },
                        [](const FirstOrder&) { return std::string("fo"); },
                        [](const HighOrder& h) { return "ho" + std::to_string(h.order); },
                        [](const HighPerformance&) { return std::string("hp"); },
                    },
                    kind);
}

ObserverKind parse_kind(const std::string& name) {
  if (name == "zo") return ZeroOrder{};
  if (name == "fo") return FirstOrder{};
  if (name == "hp") return HighPerformance{};
  if (name.size() > 2 && name.compare(0, 2, "ho") == 0) {
    const std::string digits = name.substr(2);
    if (digits.find_first_not_of("0123456789") == std::string::npos &&
        digits.size() <= 2) {
      return HighOrder{std::stoi(digits)};
    }
  }
  throw ValidationError("unknown observer kind '" + name + "' (expected zo, fo, hp, ho<m>)");
}

void validate(const ObserverGains& gains) {
  if (const auto* h = std::get_if<HighOrder>(&gains.kind)) {
    if (h->order < 0 || h->order > tol::kMaxObserverOrder) {
      throw ValidationError("high-order observer order must be in [0, " +
                            std::to_string(tol::kMaxObserverOrder) + "]");
    }
  }
  if (static_cast<int>(gains.L.size()) != observer_dimension(gains.kind)) {
    throw ValidationError("observer " + kind_name(gains.kind) + " needs " +
                          std::to_string(observer_dimension(gains.kind)) +
                          " gain vectors, got " + std::to_string(gains.L.size()));
  }
  for (const auto& l : gains.L) {
    if (!l.allFinite()) throw ValidationError("observer gains must be finite");
  }
  for (double p : gains.free_params) {
    if (!std::isfinite(p)) throw ValidationError("observer free parameters must be finite");
  }
}

Eigen::MatrixXd AuxiliaryDynamics::gain_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(gains.L.size()), 2);
  for (size_t i = 0; i < gains.L.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = gains.L[i].transpose();
  }
  return m;
}

AuxiliaryDynamics build_zo(const DiscreteServoModel& nominal, const Eigen::Vector2d& L0) {
  return build_ho(nominal, ObserverGains{ZeroOrder{}, {L0}, {}});
}

AuxiliaryDynamics build_fo(const DiscreteServoModel& nominal, const Eigen::Vector2d& L0,
                           const Eigen::Vector2d& L1) {
  return build_ho(nominal, ObserverGains{FirstOrder{}, {L0, L1}, {}});
}

AuxiliaryDynamics build_hp(const DiscreteServoModel& nominal, const Eigen::Vector2d& L0,
                           const Eigen::Vector2d& L1) {
  check_nominal(nominal);
  Eigen::MatrixXd shift(2, 2);
  shift << 0.0, 1.0, -1.0, 2.0;
  Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(2, 2);
  inputs.col(1) = nominal.D;
  return assemble(nominal, ObserverGains{HighPerformance{}, {L0, L1}, {}}, shift, inputs);
}

AuxiliaryDynamics build_ho(const DiscreteServoModel& nominal, const ObserverGains& gains) {
  check_nominal(nominal);
  const int dim = observer_dimension(gains.kind);
  if (is_hp(gains.kind)) throw ValidationError("build_ho does not build HP observers");
  validate(gains);
  Eigen::MatrixXd inputs(2, dim);
  for (int i = 0; i < dim; ++i) {
    if (i == 0) {
      inputs.col(i) = nominal.D;
    } else if (i == 1) {
      inputs.col(i) = nominal.D_tilde;
    } else {
      inputs.col(i) = disturbance_input_vector(nominal.source, nominal.Ts, i);
    }
  }
  return assemble(nominal, gains, taylor_shift(dim, nominal.Ts), inputs);
}

AuxiliaryDynamics build(const DiscreteServoModel& nominal, const ObserverGains& gains) {
  validate(gains);
  AuxiliaryDynamics dyn = is_hp(gains.kind)
                              ? build_hp(nominal, gains.L[0], gains.L[1])
                              : build_ho(nominal, gains);
  dyn.gains = gains;
  return dyn;
}

ObserverState initial_state(const AuxiliaryDynamics& dyn, const PlantState& x0) {
  return {dyn.gain_matrix() * x0.vec()};
}

ObserverState observer_update(const AuxiliaryDynamics& dyn, const ObserverState& s,
                              const PlantState& x, double u) {
  check_state(dyn, s);
  return {dyn.Gamma * s.z_hat + dyn.Omega_x * x.vec() + dyn.Omega_u * u};
}

Eigen::VectorXd reconstruct(const AuxiliaryDynamics& dyn, const ObserverState& s,
                            const PlantState& x) {
  check_state(dyn, s);
  const Eigen::VectorXd all = s.z_hat - dyn.gain_matrix() * x.vec();
  if (is_hp(dyn.gains.kind)) return all.tail(1);
  return all;
}

double estimate(const AuxiliaryDynamics& dyn, const ObserverState& s, const PlantState& x) {
  return reconstruct(dyn, s, x)(0);
}

std::optional<double> estimate_rate(const AuxiliaryDynamics& dyn, const ObserverState& s,
                                    const PlantState& x) {
  if (is_hp(dyn.gains.kind) || dyn.dim() < 2) return std::nullopt;
  check_state(dyn, s);
  return s.z_hat(1) - dyn.gains.L[1].dot(x.vec());
}

double hp_delayed_estimate(const AuxiliaryDynamics& dyn, const ObserverState& s,
                           const PlantState& x) {
  if (!is_hp(dyn.gains.kind)) throw ValidationError("delayed estimate exists only for HP");
  check_state(dyn, s);
  return s.z_hat(0) - dyn.gains.L[0].dot(x.vec());
}

Eigen::VectorXd true_auxiliary_disturbance(const AuxiliaryDynamics& dyn,
                                           const DisturbanceSignal& signal, long k) {
  const double Ts = dyn.nominal.Ts;
  Eigen::VectorXd T(dyn.dim());
  if (is_hp(dyn.gains.kind)) {
    T << eval_disturbance(signal, static_cast<double>(k - 1) * Ts),
        eval_disturbance(signal, static_cast<double>(k) * Ts);
    return T;
  }
  const double t = static_cast<double>(k) * Ts;
  for (int i = 0; i < dyn.dim(); ++i) T(i) = eval_disturbance_derivative(signal, t, i);
  return T;
}

Eigen::VectorXd estimation_error(const AuxiliaryDynamics& dyn, const ObserverState& s,
                                 const PlantState& x, const DisturbanceSignal& signal,
                                 long k) {
  check_state(dyn, s);
  return true_auxiliary_disturbance(dyn, signal, k) + dyn.gain_matrix() * x.vec() - s.z_hat;
}

Eigen::VectorXd truncation_residual(const AuxiliaryDynamics& dyn,
                                    const DisturbanceSignal& signal, long k,
                                    const Eigen::Vector2d& pi) {
  const Eigen::VectorXd Tk = true_auxiliary_disturbance(dyn, signal, k);
  const Eigen::VectorXd Tn = true_auxiliary_disturbance(dyn, signal, k + 1);
  return Tn - dyn.shift * Tk + dyn.gain_matrix() * (dyn.inputs * Tk - pi);
}

}  // namespace dob
