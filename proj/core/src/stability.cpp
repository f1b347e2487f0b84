#include "dob/stability.hpp"

#include <algorithm>
#include <array>
#include <exception>
#include <limits>
#include <cmath>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "dob/errors.hpp"
#include "dob/tolerances.hpp"

namespace dob {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Eigen::Vector2d fo_direction(const DiscreteServoModel& n) {
  return {6.0 / n.D(0), -4.0 / n.D(1)};
}

Eigen::Vector2d hp_direction(const DiscreteServoModel& n) {
  return {1.0 / n.D(0), 1.0 / n.D(1)};
}

void check_nominal_inputs(const DiscreteServoModel& n) {
  if (!(n.D(0) > 0.0) || !(n.D(1) > 0.0)) {
    throw ValidationError("tuning needs a nominal model with positive disturbance input");
  }
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

bool is_zo(const ObserverKind& k) {
  if (std::holds_alternative<ZeroOrder>(k)) return true;
  const auto* h = std::get_if<HighOrder>(&k);
  return h != nullptr && h->order == 0;
}

// 1 - L0^T D of the true plant, i.e. 1 - alpha l0 under the friction-ratio
// assumption.
double inner_loop_observer_mode(const LoopConfig& cfg) {
  return 1.0 - cfg.gains.L[0].dot(discretize(cfg.plant, cfg.Ts).D);
}

}  // namespace

void validate(const EigenSpec& spec, size_t count) {
  if (spec.desired.size() != count) {
    throw ValidationError("eigenvalue spec needs " + std::to_string(count) + " entries, got " +
                          std::to_string(spec.desired.size()));
  }
  for (double l : spec.desired) {
    if (!std::isfinite(l)) throw ValidationError("desired eigenvalues must be finite");
    if (!(std::abs(l) < 1.0)) {
      throw ValidationError("desired eigenvalue " + fmt(l) + " violates |lambda| < 1");
    }
  }
}

ObserverGains tune_zo(const DiscreteServoModel& nominal, double l0) {
  if (!std::isfinite(l0)) throw ValidationError("l0 must be finite");
  const double n1 = nominal.D.lpNorm<1>();
  if (!(n1 > 0.0)) throw ValidationError("nominal disturbance input is zero");
  return ObserverGains{ZeroOrder{}, {Eigen::Vector2d::Constant(l0 / n1)}, {l0}};
}

ObserverGains fo_gains(const DiscreteServoModel& nominal, double l0, double l1) {
  check_nominal_inputs(nominal);
  const Eigen::Vector2d v = fo_direction(nominal);
  return ObserverGains{FirstOrder{}, {l0 * v, l1 * v}, {l0, l1}};
}

ObserverGains hp_gains(const DiscreteServoModel& nominal, double l0, double l1) {
  check_nominal_inputs(nominal);
  const Eigen::Vector2d v = hp_direction(nominal);
  return ObserverGains{HighPerformance{}, {(0.5 + l0) * v, (1.0 + l1) * v}, {l0, l1}};
}

ObserverGains gains_from_params(const DiscreteServoModel& nominal, const ObserverKind& kind,
                                const std::vector<double>& params) {
  auto need = [&](size_t n) {
    if (params.size() < n) {
      throw ValidationError(kind_name(kind) + " observer needs " + std::to_string(n) +
                            " free parameter(s)");
    }
  };
  if (is_zo(kind)) {
    need(1);
    ObserverGains g = tune_zo(nominal, params[0]);
    g.kind = kind;
    return g;
  }
  if (std::holds_alternative<FirstOrder>(kind)) {
    need(2);
    return fo_gains(nominal, params[0], params[1]);
  }
  if (std::holds_alternative<HighPerformance>(kind)) {
    need(2);
    return hp_gains(nominal, params[0], params[1]);
  }
  throw ValidationError("high-order observers take explicit gain vectors");
}

ObserverGains tune_fo(const DiscreteServoModel& nominal, const EigenSpec& spec) {
  validate(spec, 2);
  check_nominal_inputs(nominal);
  const double s = spec.desired[0] + spec.desired[1];
  const double p = spec.desired[0] * spec.desired[1];
  const double Ts = nominal.Ts;
  const Eigen::Vector2d v = fo_direction(nominal);
  const double a = v.dot(nominal.D);
  const double c = v.dot(nominal.D_tilde);

  // trace(Gamma) = 2 - a l0 - c l1, det(Gamma) = 1 - a l0 - (c - a Ts) l1.
  Eigen::Matrix2d jac;
  jac << -a, -c, -a, -(c - a * Ts);

  Eigen::Vector2d l{1.0 - s / 2.0, 0.0};
  l(1) = (p - 1.0 + 2.0 * l(0)) / (2.0 * Ts);

  auto residual = [&](const Eigen::Vector2d& x) {
    const AuxiliaryDynamics dyn = build_fo(nominal, x(0) * v, x(1) * v);
    return Eigen::Vector2d{dyn.Gamma.trace() - s, dyn.Gamma.determinant() - p};
  };

  Eigen::Vector2d r = residual(l);
  double best = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < tol::kNewtonMaxIterations && best > tol::kNewtonResidual; ++it) {
    const Eigen::Vector2d next = l - jac.fullPivLu().solve(r);
    const Eigen::Vector2d rn = residual(next);
    const double norm = rn.lpNorm<Eigen::Infinity>();
    if (!(norm < best)) break;  // rounding floor reached
    l = next;
    r = rn;
    best = norm;
  }
  // The residual floor is set by rounding in the Gamma entries, which grow
  // like 1/Ts.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(a * l(1)) * Ts + std::abs(a * l(0)));
  if (!(best <= std::max(tol::kNewtonResidual, floor))) {
    throw ConvergenceError("FO tuning did not converge, residual " + fmt(best), best);
  }
  return ObserverGains{FirstOrder{}, {l(0) * v, l(1) * v}, {l(0), l(1)}};
}

ObserverGains tune_hp(const DiscreteServoModel& nominal, const EigenSpec& spec) {
  validate(spec, 2);
  const double l1 = -(spec.desired[0] + spec.desired[1]) / 2.0;
  const double l0 = -(spec.desired[0] * spec.desired[1]) / 2.0;
  return hp_gains(nominal, l0, l1);
}

ObserverGains tune(const DiscreteServoModel& nominal, const ObserverKind& kind,
                   const EigenSpec& spec) {
  if (is_zo(kind)) {
    validate(spec, 1);
    ObserverGains g = tune_zo(nominal, 1.0 - spec.desired[0]);
    g.kind = kind;
    return g;
  }
  if (std::holds_alternative<FirstOrder>(kind)) return tune_fo(nominal, spec);
  if (std::holds_alternative<HighPerformance>(kind)) return tune_hp(nominal, spec);
  throw ValidationError("eigenvalue tuning is available for zo, fo and hp only");
}

ZoVerdict check_zo(double l0, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  ZoVerdict v;
  v.open_loop = {"zo_open_loop", "0 < l0 < 2", l0, l0 > 0.0 && l0 < 2.0};
  const double al = alpha * l0;
  v.inner_loop = {"zo_inner_loop", "0 < alpha*l0 < 2", al, al > 0.0 && al < 2.0};
  return v;
}

Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& Gamma, const Eigen::MatrixXd& Q) {
  const Eigen::Index n = Gamma.rows();
  if (Gamma.cols() != n || Q.rows() != n || Q.cols() != n) {
    throw ValidationError("Lyapunov equation dimensions do not match");
  }
  if (!(spectral_radius(Gamma) < 1.0)) {
    throw ValidationError("Lyapunov equation needs rho(Gamma) < 1");
  }
  Eigen::MatrixXd P;
  if (n <= 3) {
    const Eigen::MatrixXd Gt = Gamma.transpose();
    const Eigen::MatrixXd M =
        Eigen::MatrixXd::Identity(n * n, n * n) - kron(Gt, Gt);
    const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
    const Eigen::VectorXd p = M.fullPivLu().solve(q);
    P = Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n);
  } else {
    // Doubling: P = sum_k (G^T)^k Q G^k.
    P = Q;
    Eigen::MatrixXd G = Gamma;
    int it = 0;
    for (; it < 64; ++it) {
      P += G.transpose() * P * G;
      G = G * G;
      if (G.lpNorm<Eigen::Infinity>() < 1e-18) break;
    }
    if (it == 64) throw ConvergenceError("Lyapunov doubling did not converge", G.norm());
  }
  return 0.5 * (P + P.transpose());
}

std::optional<LyapunovCertificate> certify(const Eigen::MatrixXd& Gamma, double d_k) {
  if (!std::isfinite(d_k) || d_k < 0.0) throw ValidationError("d_k must be finite and >= 0");
  if (Gamma.rows() != Gamma.cols() || Gamma.rows() == 0) {
    throw ValidationError("certify needs a non-empty square matrix");
  }
  if (!(spectral_radius(Gamma) < 1.0)) return std::nullopt;
  const Eigen::Index n = Gamma.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd P0 = solve_discrete_lyapunov(Gamma, I);
  const Eigen::MatrixXd Q0 = P0 - Gamma.transpose() * P0 * Gamma;

  LyapunovCertificate c;
  c.P = (2.0 / min_symmetric_eigenvalue(Q0)) * P0;
  c.Q = c.P - Gamma.transpose() * c.P * Gamma;
  c.kappa_e = min_symmetric_eigenvalue(c.Q) - 1.0;
  const double gp = spectral_norm(Gamma.transpose() * c.P);
  const double pmax = max_symmetric_eigenvalue(c.P);
  const double pmin = min_symmetric_eigenvalue(c.P);
  if (!(pmin > 0.0) || !(c.kappa_e > 0.0)) return std::nullopt;
  c.kappa_d = gp * gp + pmax;
  c.d_k = d_k;
  c.bound_radius = std::sqrt(c.kappa_d / c.kappa_e) * d_k;
  c.invariant_radius =
      std::sqrt((pmax * c.bound_radius * c.bound_radius + c.kappa_d * d_k * d_k) / pmin);
  c.asymptotic = d_k == 0.0;
  return c;
}

bool LoopConfig::friction_ratio_holds() const {
  const double a = plant.friction_rate();
  const double b = nominal.friction_rate();
  return std::abs(a - b) <= tol::kFrictionRatioTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

ContinuousServoModel plant_for_alpha(const ContinuousServoModel& nominal, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha must be positive");
  return ContinuousServoModel::make(nominal.inertia / alpha, nominal.viscous_friction / alpha);
}

InnerLoop inner_loop_matrix(const LoopConfig& cfg) {
  if (!is_zo(cfg.gains.kind)) throw ValidationError("inner_loop_matrix needs a ZO observer");
  validate(cfg.gains);
  const DiscreteServoModel p = discretize(cfg.plant, cfg.Ts);
  const DiscreteServoModel n = discretize(cfg.nominal, cfg.Ts);
  const Eigen::Vector2d& L0 = cfg.gains.L[0];
  InnerLoop il;
  il.A.topLeftCorner<2, 2>() = p.A - p.B * L0.transpose();
  il.A.topRightCorner<2, 1>() = p.B;
  il.A.bottomLeftCorner<1, 2>() = L0.transpose() * (n.A - Eigen::Matrix2d::Identity());
  il.A(2, 2) = 1.0;
  il.B << p.B, L0.dot(n.B);
  return il;
}

AugmentedLoop augmented_loop(const LoopConfig& cfg) {
  const DiscreteServoModel p = discretize(cfg.plant, cfg.Ts);
  const DiscreteServoModel n = discretize(cfg.nominal, cfg.Ts);
  const AuxiliaryDynamics dyn = build(n, cfg.gains);
  const int m = dyn.dim();
  // tau_hat = e_r^T zhat - L_r^T x
  const int r = std::holds_alternative<HighPerformance>(cfg.gains.kind) ? 1 : 0;
  Eigen::RowVectorXd er = Eigen::RowVectorXd::Zero(m);
  er(r) = 1.0;
  const Eigen::RowVector2d Lr = cfg.gains.L[static_cast<size_t>(r)].transpose();

  AugmentedLoop a;
  a.A.resize(2 + m, 2 + m);
  a.A.topLeftCorner(2, 2) = p.A - p.B * Lr;
  a.A.topRightCorner(2, m) = p.B * er;
  a.A.bottomLeftCorner(m, 2) = dyn.Omega_x - dyn.Omega_u * Lr;
  a.A.bottomRightCorner(m, m) = dyn.Gamma + dyn.Omega_u * er;
  a.B.resize(2 + m);
  a.B << p.B, dyn.Omega_u;
  return a;
}

std::string to_string(LoopVerdict v) {
  switch (v) {
    case LoopVerdict::Stable:
      return "stable";
    case LoopVerdict::Marginal:
      return "marginal";
    case LoopVerdict::Unstable:
      break;
  }
  return "unstable";
}

LoopVerdict classify_loop(const Eigenvalues& eig) {
  int unit = 0;
  bool outside = false;
  for (const auto& l : eig) {
    if (std::abs(l - 1.0) <= tol::kMarginalModeTolerance) {
      ++unit;
    } else if (!(std::abs(l) < 1.0)) {
      outside = true;
    }
  }
  if (outside || unit > 1) return LoopVerdict::Unstable;
  return unit == 1 ? LoopVerdict::Marginal : LoopVerdict::Stable;
}

double non_marginal_radius(const Eigenvalues& eig) {
  double r = 0.0;
  bool skipped = false;
  for (const auto& l : eig) {
    if (!skipped && std::abs(l - 1.0) <= tol::kMarginalModeTolerance) {
      skipped = true;
      continue;
    }
    r = std::max(r, std::abs(l));
  }
  return r;
}

std::optional<ModalBasis> inner_loop_modal_basis(const LoopConfig& cfg, std::string* note) {
  auto reject = [&](const std::string& why) -> std::optional<ModalBasis> {
    if (note != nullptr) *note = why;
    return std::nullopt;
  };
  if (!cfg.friction_ratio_holds()) {
    return reject("friction-ratio assumption b_m/J_m = b_mn/J_mn does not hold");
  }
  const InnerLoop il = inner_loop_matrix(cfg);
  ModalBasis mb;
  mb.modes << 1.0, std::exp(-cfg.nominal.friction_rate() * cfg.Ts), inner_loop_observer_mode(cfg);
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (std::abs(mb.modes(i) - mb.modes(j)) < 1e-9) {
        return reject("inner-loop modes are not distinct; modal basis does not exist");
      }
    }
  }
  Eigen::EigenSolver<Eigen::Matrix3d> es(il.A);
  if (es.info() != Eigen::Success) return reject("eigen-decomposition failed");
  std::array<bool, 3> used{false, false, false};
  for (int t = 0; t < 3; ++t) {
    int best = -1;
    double dist = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (used[static_cast<size_t>(i)]) continue;
      const double d = std::abs(es.eigenvalues()(i) - mb.modes(t));
      if (best < 0 || d < dist) {
        best = i;
        dist = d;
      }
    }
    used[static_cast<size_t>(best)] = true;
    if (std::abs(es.eigenvalues()(best).imag()) > 1e-12 || dist > 1e-6) {
      return reject("numerical inner-loop spectrum does not match {1, e^{-bTs}, 1-alpha*l0}");
    }
    Eigen::Vector3d v = es.eigenvectors().col(best).real();
    if (std::abs(v(2)) > 1e-12 * v.norm()) {
      v /= v(2);
    } else {
      v.normalize();
    }
    mb.S.col(t) = v;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(mb.S);
  const Eigen::Vector3d sv = svd.singularValues();
  mb.condition = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
  if (!(mb.condition <= tol::kJordanConditionLimit)) {
    return reject("modal basis condition number " + fmt(mb.condition) + " exceeds limit");
  }
  return mb;
}

ClosedLoop closed_loop_matrix(const LoopConfig& cfg) {
  const InnerLoop il = inner_loop_matrix(cfg);
  ClosedLoop cl;
  cl.K << cfg.Kp, cfg.Kd, 0.0;
  if (cfg.K_tilde) {
    std::string why;
    if (auto mb = inner_loop_modal_basis(cfg, &why)) {
      const Eigen::RowVector3d kt{(*cfg.K_tilde)(0), (*cfg.K_tilde)(1), 0.0};
      cl.K = kt * mb->S.inverse();
      cl.modal_gains = true;
    } else {
      cl.notes.push_back("modal gains unavailable (" + why + "); PD gains used instead");
    }
  }
  cl.A = il.A - il.B * cl.K;
  cl.eigenvalues = eigenvalues(cl.A);
  cl.fixed_mode = inner_loop_observer_mode(cfg);
  cl.fixed_mode_error = std::numeric_limits<double>::infinity();
  for (const auto& l : cl.eigenvalues) {
    cl.fixed_mode_error = std::min(cl.fixed_mode_error, std::abs(l - cl.fixed_mode));
  }
  if (!cl.modal_gains && cl.fixed_mode_error > 1e-8) {
    cl.notes.push_back("PD gains move the inner-loop mode 1 - alpha*l0 (distance " +
                       fmt(cl.fixed_mode_error) + ")");
  }
  return cl;
}

std::string to_string(SweepMode m) {
  switch (m) {
    case SweepMode::Observer:
      return "observer";
    case SweepMode::InnerLoop:
      return "inner";
    case SweepMode::ClosedLoop:
      break;
  }
  return "closed";
}

SweepMode parse_sweep_mode(const std::string& s) {
  if (s == "observer") return SweepMode::Observer;
  if (s == "inner") return SweepMode::InnerLoop;
  if (s == "closed") return SweepMode::ClosedLoop;
  throw ValidationError("unknown sweep mode '" + s + "' (expected observer, inner, closed)");
}

namespace {

SweepRow evaluate_sweep_point(const SweepTemplate& tmpl, const std::string& param,
                              double value) {
  SweepTemplate t = tmpl;
  double alpha = t.loop.alpha();
  if (param == "l0") {
    t.l0 = value;
  } else if (param == "l1") {
    t.l1 = value;
  } else if (param == "alpha") {
    alpha = value;
  } else if (param == "Ts") {
    t.loop.Ts = value;
  } else if (param == "K1" || param == "K2") {
    Eigen::Vector2d k = t.loop.K_tilde.value_or(Eigen::Vector2d::Zero());
    k(param == "K1" ? 0 : 1) = value;
    t.loop.K_tilde = k;
  } else if (param == "Kp") {
    t.loop.Kp = value;
  } else if (param == "Kd") {
    t.loop.Kd = value;
  }
  t.loop.plant = plant_for_alpha(t.loop.nominal, alpha);
  const DiscreteServoModel n = discretize(t.loop.nominal, t.loop.Ts);
  t.loop.gains = gains_from_params(n, t.kind, {t.l0, t.l1});

  SweepRow row;
  row.value = value;
  Eigenvalues eig;
  switch (t.mode) {
    case SweepMode::Observer:
      eig = eigenvalues(build(n, t.loop.gains).Gamma);
      row.spectral_radius = 0.0;
      for (const auto& l : eig) row.spectral_radius = std::max(row.spectral_radius, std::abs(l));
      row.verdict = row.spectral_radius < 1.0 ? LoopVerdict::Stable : LoopVerdict::Unstable;
      return row;
    case SweepMode::InnerLoop:
      eig = eigenvalues(augmented_loop(t.loop).A);
      break;
    case SweepMode::ClosedLoop:
      if (is_zo(t.kind)) {
        eig = closed_loop_matrix(t.loop).eigenvalues;
      } else {
        const AugmentedLoop a = augmented_loop(t.loop);
        Eigen::RowVectorXd K = Eigen::RowVectorXd::Zero(a.A.cols());
        K(0) = t.loop.Kp;
        K(1) = t.loop.Kd;
        eig = eigenvalues(a.A - a.B * K);
      }
      break;
  }
  row.spectral_radius = non_marginal_radius(eig);
  row.verdict = classify_loop(eig);
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_stability(const SweepTemplate& tmpl, const std::string& param,
                                      std::vector<double> values, int threads) {
  static const std::vector<std::string> kParams{"l0", "l1", "alpha", "Ts",
                                                "K1", "K2", "Kp",    "Kd"};
  if (std::find(kParams.begin(), kParams.end(), param) == kParams.end()) {
    throw ValidationError("unknown sweep parameter '" + param +
                          "' (expected l0, l1, alpha, Ts, K1, K2, Kp, Kd)");
  }
  std::sort(values.begin(), values.end());
  std::vector<SweepRow> rows(values.size());
  const size_t workers = std::clamp<size_t>(static_cast<size_t>(std::max(threads, 1)), 1,
                                            std::max<size_t>(values.size(), 1));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](size_t w) {
    try {
      for (size_t i = w; i < values.size(); i += workers) {
        rows[i] = evaluate_sweep_point(tmpl, param, values[i]);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

bool StabilityReport::pass() const {
  return std::all_of(constraints.begin(), constraints.end(),
                     [](const ConstraintCheck& c) { return c.pass; });
}

StabilityReport analyze_observer(const LoopConfig& cfg, bool inner_loop, double d_k) {
  const DiscreteServoModel n = discretize(cfg.nominal, cfg.Ts);
  const AuxiliaryDynamics dyn = build(n, cfg.gains);
  StabilityReport rep;
  rep.gains = cfg.gains;
  rep.Gamma = dyn.Gamma;
  rep.observer_eigenvalues = eigenvalues(dyn.Gamma);
  rep.spectral_radius = spectral_radius(dyn.Gamma);
  rep.open_loop_pass = rep.spectral_radius < 1.0;

  const bool zo = is_zo(cfg.gains.kind) && !cfg.gains.free_params.empty();
  if (zo) {
    const ZoVerdict v = check_zo(cfg.gains.free_params[0], cfg.alpha());
    rep.constraints.push_back(v.open_loop);
    if (inner_loop) rep.constraints.push_back(v.inner_loop);
  }
  rep.constraints.push_back({"observer_spectral_radius", "rho(Gamma) < 1", rep.spectral_radius,
                             rep.open_loop_pass});

  if (inner_loop) {
    InnerLoopReport il;
    il.alpha = cfg.alpha();
    il.eigenvalues = eigenvalues(augmented_loop(cfg).A);
    il.verdict = classify_loop(il.eigenvalues);
    rep.constraints.push_back({"inner_loop_spectrum",
                               "one unit mode, all other |lambda| < 1",
                               non_marginal_radius(il.eigenvalues),
                               il.verdict != LoopVerdict::Unstable});
    if (il.verdict == LoopVerdict::Marginal) {
      rep.notes.push_back("inner loop has the structural unit mode (position equilibrium shift)");
    }
    if (!cfg.friction_ratio_holds()) {
      rep.notes.push_back("friction-ratio assumption does not hold; analytic inner-loop "
                          "modes do not apply");
    }
    rep.inner_loop = il;
  }

  rep.certificate = certify(dyn.Gamma, d_k);
  if (!rep.certificate) {
    rep.notes.push_back("no Lyapunov certificate: rho(Gamma) = " + fmt(rep.spectral_radius));
  } else if (rep.certificate->asymptotic) {
    rep.notes.push_back("d_k = 0: estimation error is asymptotically stable");
  }
  for (const auto& c : rep.constraints) {
    if (!c.pass) {
      rep.notes.push_back("constraint " + c.expression + " violated (value " + fmt(c.value) + ")");
    }
  }
  return rep;
}

}  // namespace dob
