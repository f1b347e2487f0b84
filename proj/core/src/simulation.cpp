#include "dob/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

#include "dob/errors.hpp"

namespace dob {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool finite_and_bounded(double v) {
  return std::isfinite(v) && std::abs(v) <= tol::kDivergenceLimit;
}

LoopConfig loop_of(const ScenarioConfig& cfg, const ObserverGains& gains) {
  LoopConfig loop;
  loop.plant = cfg.plant;
  loop.nominal = cfg.nominal;
  loop.Ts = cfg.Ts;
  loop.gains = gains;
  loop.Kp = cfg.Kp;
  loop.Kd = cfg.Kd;
  if (cfg.outer == OuterLoop::StateFeedback) loop.K_tilde = cfg.K_tilde;
  return loop;
}

template <class F>
void parallel_for(size_t n, int threads, F&& body) {
  const size_t workers =
      std::clamp<size_t>(static_cast<size_t>(std::max(threads, 1)), 1, std::max<size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](size_t w) {
    for (size_t i = w; i < n; i += workers) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
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
}

}  // namespace

double eval_reference(const ReferenceSignal& r, double t) {
  return std::visit(Overloaded{
                        [](const ZeroReference&) { return 0.0; },
                        [&](const StepReference& s) { return t >= s.t_on ? s.amplitude : 0.0; },
                        [&](const SinusoidReference& s) {
                          if (t < s.t_on || t > s.t_off) return 0.0;
                          return s.amplitude *
                                 std::sin(2.0 * std::numbers::pi * s.frequency_hz * (t - s.t_on));
                        },
                    },
                    r);
}

double eval_reference_rate(const ReferenceSignal& r, double t) {
  return std::visit(Overloaded{
                        [](const ZeroReference&) { return 0.0; },
                        [](const StepReference&) { return 0.0; },
                        [&](const SinusoidReference& s) {
                          if (t < s.t_on || t >= s.t_off) return 0.0;
                          const double w = 2.0 * std::numbers::pi * s.frequency_hz;
                          return s.amplitude * w * std::cos(w * (t - s.t_on));
                        },
                    },
                    r);
}

void validate(const ReferenceSignal& r) {
  std::visit(Overloaded{
                 [](const ZeroReference&) {},
                 [](const StepReference& s) {
                   if (!std::isfinite(s.amplitude) || !std::isfinite(s.t_on)) {
                     throw ValidationError("step reference must be finite");
                   }
                 },
                 [](const SinusoidReference& s) {
                   if (!std::isfinite(s.amplitude) || !std::isfinite(s.frequency_hz) ||
                       !std::isfinite(s.t_on) || !std::isfinite(s.t_off)) {
                     throw ValidationError("sinusoid reference must be finite");
                   }
                   if (s.t_on > s.t_off) {
                     throw ValidationError("sinusoid reference needs t_on <= t_off");
                   }
                 },
             },
             r);
}

ObserverGains resolve_gains(const ObserverSetup& setup, const DiscreteServoModel& nominal) {
  switch (setup.source) {
    case ObserverSetup::Source::FreeParams:
      return gains_from_params(nominal, setup.kind, setup.values);
    case ObserverSetup::Source::Eigenvalues:
      return tune(nominal, setup.kind, EigenSpec{setup.values});
    case ObserverSetup::Source::Explicit:
      break;
  }
  ObserverGains g{setup.kind, setup.gains, {}};
  validate(g);
  return g;
}

void validate(const ScenarioConfig& cfg) {
  ContinuousServoModel::make(cfg.plant.inertia, cfg.plant.viscous_friction);
  ContinuousServoModel::make(cfg.nominal.inertia, cfg.nominal.viscous_friction);
  if (!std::isfinite(cfg.Ts) || !(cfg.Ts > 0.0)) throw ValidationError("Ts must be positive");
  if (!std::isfinite(cfg.duration) || !(cfg.duration > 0.0)) {
    throw ValidationError("duration must be positive");
  }
  const double steps = cfg.duration / cfg.Ts;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
    throw ValidationError("duration must be a whole number of sampling periods");
  }
  if (!std::isfinite(cfg.Kp) || !std::isfinite(cfg.Kd) || !cfg.K_tilde.allFinite()) {
    throw ValidationError("controller gains must be finite");
  }
  if (cfg.substeps < 1) throw ValidationError("substeps must be >= 1");
  if (cfg.encoder_counts && *cfg.encoder_counts < 1) {
    throw ValidationError("encoder counts must be positive");
  }
  if (cfg.outer == OuterLoop::StateFeedback) {
    if (!cfg.observer || !std::holds_alternative<ZeroOrder>(cfg.observer->kind) ||
        !cfg.disturbance_feedback) {
      throw ValidationError("state-feedback outer loop needs a ZO observer in the inner loop");
    }
  }
  if (!std::isfinite(cfg.initial.q) || !std::isfinite(cfg.initial.dq)) {
    throw ValidationError("initial state must be finite");
  }
  validate(cfg.reference);
  validate(cfg.disturbance);
}

long scenario_steps(const ScenarioConfig& cfg) {
  return static_cast<long>(std::llround(cfg.duration / cfg.Ts));
}

StabilityReport scenario_stability(const ScenarioConfig& cfg) {
  if (!cfg.observer) throw ValidationError("scenario has no observer");
  const DiscreteServoModel n = discretize(cfg.nominal, cfg.Ts);
  return analyze_observer(loop_of(cfg, resolve_gains(*cfg.observer, n)), cfg.disturbance_feedback);
}

SimulationTrace run_closed_loop(const ScenarioConfig& cfg) {
  validate(cfg);
  const DiscreteServoModel plant = discretize(cfg.plant, cfg.Ts);
  const DiscreteServoModel nominal = discretize(cfg.nominal, cfg.Ts);

  std::optional<AuxiliaryDynamics> dyn;
  Eigen::RowVector3d K_sf = Eigen::RowVector3d::Zero();
  if (cfg.observer) {
    const ObserverGains gains = resolve_gains(*cfg.observer, nominal);
    if (!cfg.allow_unstable) {
      const StabilityReport rep = analyze_observer(loop_of(cfg, gains), cfg.disturbance_feedback);
      if (!rep.pass()) {
        std::string msg = "stability constraint violated";
        for (const auto& c : rep.constraints) {
          if (!c.pass) msg += "; " + c.expression;
        }
        throw ConstraintViolation(msg);
      }
    }
    dyn = build(nominal, gains);
    if (cfg.outer == OuterLoop::StateFeedback) {
      K_sf = closed_loop_matrix(loop_of(cfg, gains)).K;
    }
  }

  const long steps = scenario_steps(cfg);
  const DisturbanceSignal disturbance =
      cfg.disturbance_hold
          ? DisturbanceSignal{sample_and_hold(cfg.disturbance, cfg.Ts, cfg.duration,
                                              *cfg.disturbance_hold)}
          : cfg.disturbance;
  SimulationTrace tr;
  const bool has_rate = dyn && estimate_rate(*dyn, initial_state(*dyn, cfg.initial), cfg.initial);
  auto reserve = [&](std::vector<double>& v) { v.reserve(static_cast<size_t>(steps) + 1); };
  for (auto* v : {&tr.t, &tr.q, &tr.dq, &tr.q_ref, &tr.u_p, &tr.u, &tr.tau_d, &tr.tau_hat,
                  &tr.est_error, &tr.tracking_error}) {
    reserve(*v);
  }
  tr.k.reserve(static_cast<size_t>(steps) + 1);

  PlantState x = cfg.initial;
  ObserverState z;
  if (dyn) z = initial_state(*dyn, x);
  const double quantum =
      cfg.encoder_counts ? 2.0 * std::numbers::pi / *cfg.encoder_counts : 0.0;
  double q_prev_meas = quantum > 0.0 ? std::round(x.q / quantum) * quantum : x.q;

  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.Ts;

    // (1) measurement
    PlantState meas = x;
    if (quantum > 0.0) {
      meas.q = std::round(x.q / quantum) * quantum;
      meas.dq = k == 0 ? 0.0 : (meas.q - q_prev_meas) / cfg.Ts;
      q_prev_meas = meas.q;
    }

    // (2) estimate
    double tau_hat = 0.0;
    std::optional<double> rate;
    if (dyn) {
      tau_hat = estimate(*dyn, z, meas);
      rate = estimate_rate(*dyn, z, meas);
    }

    // (3) outer loop, (4) inner loop
    const double q_ref = eval_reference(cfg.reference, t);
    double u_p = 0.0;
    if (cfg.outer == OuterLoop::PD) {
      u_p = cfg.Kp * (q_ref - meas.q) +
            cfg.Kd * (eval_reference_rate(cfg.reference, t) - meas.dq);
    } else {
      const Eigen::Vector3d xi{meas.q, meas.dq, z.z_hat(0)};
      u_p = K_sf(0) * q_ref - K_sf.dot(xi);
    }
    const double u = (dyn && cfg.disturbance_feedback) ? u_p + tau_hat : u_p;

    const double tau_d = eval_disturbance(disturbance, t);
    tr.k.push_back(k);
    tr.t.push_back(t);
    tr.q.push_back(x.q);
    tr.dq.push_back(x.dq);
    tr.q_ref.push_back(q_ref);
    tr.u_p.push_back(u_p);
    tr.u.push_back(u);
    tr.tau_d.push_back(tau_d);
    tr.tau_hat.push_back(tau_hat);
    tr.est_error.push_back(tau_d - tau_hat);
    tr.tracking_error.push_back(q_ref - x.q);
    if (has_rate) {
      tr.tau_hat_dot.push_back(rate.value_or(0.0));
      tr.tau_d_dot.push_back(eval_disturbance_derivative(disturbance, t, 1));
    }

    // The auxiliary states scale with the gains (FO reaches ~1e6 in normal
    // operation), so divergence is judged on physical quantities only.
    const bool bounded = finite_and_bounded(x.q) && finite_and_bounded(x.dq) &&
                         finite_and_bounded(u) && finite_and_bounded(tau_hat) &&
                         (!rate || finite_and_bounded(*rate));
    if (!bounded) {
      tr.diverged = true;
      tr.diverged_at = k;
      break;
    }
    if (k == steps) break;

    // (5) observer, (6) plant
    if (dyn) z = observer_update(*dyn, z, meas, u);
    const Eigen::Vector2d pi =
        exact_disturbance_increment(cfg.plant, disturbance, k, cfg.Ts, cfg.substeps);
    x = plant_step(plant, x, u, pi);
  }
  return tr;
}

Metrics compute_metrics(const SimulationTrace& trace, const MetricWindows& w) {
  Metrics m;
  m.diverged = trace.diverged;
  std::vector<size_t> track, est;
  for (size_t i = 0; i < trace.size(); ++i) {
    const double t = trace.t[i];
    if (t >= w.track_begin && t <= w.track_end) track.push_back(i);
    if (t >= w.est_begin && t <= w.est_end) est.push_back(i);
  }
  if (track.empty() || est.empty()) {
    if (!trace.diverged) throw ValidationError("metric window holds no samples");
    const double inf = std::numeric_limits<double>::infinity();
    m.rms_tracking = m.steady_state_error = m.rms_est_error = m.peak_est_error = inf;
    return m;
  }
  auto rms = [](const std::vector<double>& v, const std::vector<size_t>& idx) {
    double s = 0.0;
    for (size_t i : idx) s += v[i] * v[i];
    return std::sqrt(s / static_cast<double>(idx.size()));
  };
  m.rms_tracking = rms(trace.tracking_error, track);
  const size_t tail = std::max<size_t>(1, track.size() / 10);
  double sum = 0.0;
  for (size_t j = track.size() - tail; j < track.size(); ++j) {
    sum += std::abs(trace.tracking_error[track[j]]);
  }
  m.steady_state_error = sum / static_cast<double>(tail);
  m.rms_est_error = rms(trace.est_error, est);
  for (size_t i : est) m.peak_est_error = std::max(m.peak_est_error, std::abs(trace.est_error[i]));
  if (!trace.tau_hat_dot.empty()) {
    std::vector<double> diff(trace.size());
    for (size_t i = 0; i < trace.size(); ++i) diff[i] = trace.tau_d_dot[i] - trace.tau_hat_dot[i];
    m.rms_rate_error = rms(diff, est);
    m.rms_rate = rms(trace.tau_d_dot, est);
  }
  return m;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope needs >= 2 points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("log-log fit needs positive data");
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0)) throw ValidationError("log-log fit needs distinct abscissae");
  return sxy / sxx;
}

std::vector<OrderStudyRow> order_study(const ScenarioConfig& tmpl, const OrderStudyOptions& opt) {
  if (opt.Ts.size() < 3) throw ValidationError("order study needs at least 3 sampling times");
  const size_t nt = opt.Ts.size();
  std::vector<ScenarioConfig> cfgs;
  for (const auto& kind : opt.kinds) {
    for (double Ts : opt.Ts) {
      ScenarioConfig c = tmpl;
      c.Ts = Ts;
      c.observer = kind.setup;
      if (opt.hold) c.disturbance_hold = opt.hold;
      cfgs.push_back(std::move(c));
    }
  }
  const std::vector<SimulationTrace> traces = run_batch(cfgs, opt.threads);

  std::vector<OrderStudyRow> rows;
  for (size_t j = 0; j < opt.kinds.size(); ++j) {
    OrderStudyRow row;
    row.label = opt.kinds[j].label;
    bool all_tiny = true;
    for (size_t i = 0; i < nt; ++i) {
      const SimulationTrace& tr = traces[j * nt + i];
      if (tr.diverged) {
        row.notes.push_back("Ts = " + std::to_string(opt.Ts[i]) + " diverged, excluded");
        continue;
      }
      double peak = 0.0;
      for (size_t r = 0; r < tr.size(); ++r) {
        if (tr.t[r] >= opt.window_begin) peak = std::max(peak, std::abs(tr.est_error[r]));
      }
      row.Ts.push_back(opt.Ts[i]);
      row.peak_error.push_back(peak);
      all_tiny = all_tiny && peak < 1e-8;
    }
    if (row.Ts.size() < 3) {
      throw ValidationError("order study for " + row.label + " has fewer than 3 valid points");
    }
    if (!all_tiny) row.slope = loglog_slope(row.Ts, row.peak_error);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SimulationTrace> run_batch(const std::vector<ScenarioConfig>& cfgs, int threads) {
  std::vector<SimulationTrace> out(cfgs.size());
  parallel_for(cfgs.size(), threads, [&](size_t i) { out[i] = run_closed_loop(cfgs[i]); });
  return out;
}

}  // namespace dob
