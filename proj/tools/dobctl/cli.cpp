#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dob/errors.hpp"
#include "dob/io.hpp"
#include "dob/scenarios.hpp"
#include "dob/simulation.hpp"
#include "dob/stability.hpp"

namespace dob::cli {
namespace {

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  int threads = 0;
  bool allow_unstable = false;

  // observer selection
  std::string observer;
  std::vector<double> eig;
  std::optional<double> l0, l1, bandwidth, alpha;
  bool inner_loop = false;
  double d_k = 0.0;

  // simulate
  std::string scenario;
  std::optional<int> encoder_counts;
  std::optional<int> substeps;

  // sweep
  std::string param;
  std::vector<double> values;
  std::optional<double> from, to;
  int steps = 0;
  std::string mode = "observer";

  // order-study
  std::vector<double> ts{2e-3, 1e-3, 5e-4, 2.5e-4};
  std::vector<std::string> kinds{"zo", "fo", "hp"};
  double radius = 0.725;
  std::string hold = "zoh";
  double window_begin = 2.0;

  // reproduce
  std::string preset;
};

int worker_count(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Json base_document(const Options& o, const Json& fallback) {
  Json doc = o.config.empty() ? fallback : read_json_file(o.config);
  for (const auto& ov : o.overrides) apply_override(doc, ov);
  return doc;
}

std::string bandwidth_note(double g, double Ts) {
  return "bandwidth " + format_double(g) + " rad/s mapped by l0 = 1 - exp(-g Ts) = " +
         format_double(1.0 - std::exp(-g * Ts)) +
         "; this convention gives 0.2953 at 350 rad/s and 1 ms, not 0.275";
}

// Folds the observer and loop flags into a scenario document.
void apply_flags(Json& doc, const Options& o, std::vector<std::string>& notes) {
  if (o.alpha) {
    if (!doc.contains("loop") || !doc["loop"].is_object()) doc["loop"] = Json::object();
    doc["loop"].erase("plant");
    doc["loop"]["alpha"] = *o.alpha;
  }
  const bool source_flag = !o.eig.empty() || o.l0 || o.l1 || o.bandwidth;
  if (o.observer.empty() && !source_flag) return;

  const Json old = doc.contains("observer") && doc["observer"].is_object() ? doc["observer"]
                                                                           : Json::object();
  std::string kind = o.observer;
  if (kind.empty()) kind = old.contains("kind") ? old["kind"].get<std::string>() : "zo";
  const int dim = observer_dimension(parse_kind(kind));

  Json obs{{"kind", kind}};
  if (!o.eig.empty()) {
    obs["eig"] = o.eig;
  } else if (o.l0 || o.l1) {
    if (!o.l0) throw ValidationError("--l1 needs --l0");
    obs["l0"] = *o.l0;
    if (o.l1) obs["l1"] = *o.l1;
  } else if (o.bandwidth) {
    double Ts = 1e-3;
    if (doc.contains("loop") && doc["loop"].contains("Ts") && doc["loop"]["Ts"].is_number()) {
      Ts = doc["loop"]["Ts"].get<double>();
    }
    if (!(*o.bandwidth > 0.0)) throw ValidationError("--bandwidth must be positive");
    const double lambda = std::exp(-*o.bandwidth * Ts);
    if (dim == 1) {
      obs["l0"] = 1.0 - lambda;
    } else {
      obs["eig"] = std::vector<double>(static_cast<size_t>(dim), lambda);
    }
    notes.push_back(bandwidth_note(*o.bandwidth, Ts));
  } else {
    for (const char* key : {"l0", "l1", "eig", "gains"}) {
      if (old.contains(key)) obs[key] = old[key];
    }
  }
  doc["observer"] = obs;
}

LoopConfig loop_config(const ScenarioConfig& c, const ObserverGains& gains) {
  LoopConfig loop{c.plant, c.nominal, c.Ts, gains, c.Kp, c.Kd, std::nullopt};
  if (c.outer == OuterLoop::StateFeedback) loop.K_tilde = c.K_tilde;
  return loop;
}

void emit_json(const Json& j, const Options& o, const std::string& suffix, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!o.out.empty()) write_text_file(o.out + suffix, text);
}

std::vector<double> sweep_values(const Options& o) {
  if (!o.values.empty()) {
    if (o.from || o.to || o.steps) throw ValidationError("use either --values or --from/--to/--steps");
    return o.values;
  }
  if (!o.from || !o.to || o.steps < 2) {
    throw ValidationError("sweep needs --values or --from, --to and --steps >= 2");
  }
  std::vector<double> v;
  for (int i = 0; i < o.steps; ++i) {
    v.push_back(*o.from + (*o.to - *o.from) * i / (o.steps - 1));
  }
  return v;
}

int cmd_discretize(const Options& o, std::ostream& out) {
  const ModelConfig def;
  const Json fallback{{"schema_version", kSchemaVersion},
                      {"J", def.model.inertia},
                      {"b", def.model.viscous_friction},
                      {"Ts", def.Ts}};
  const ModelConfig mc = model_config_from_json(base_document(o, fallback));
  emit_json(to_json(discretize(mc.model, mc.Ts)), o, ".json", out);
  return kExitOk;
}

int cmd_tune_analyze(const Options& o, bool tune, std::ostream& out) {
  Json doc = base_document(o, scenario_to_json(default_scenario()));
  std::vector<std::string> notes;
  apply_flags(doc, o, notes);
  const ScenarioConfig cfg = scenario_from_json(doc);
  if (!cfg.observer) {
    throw ValidationError("no observer given; use --observer with --eig, --l0 or --bandwidth");
  }
  const DiscreteServoModel nominal = discretize(cfg.nominal, cfg.Ts);
  const ObserverGains gains = resolve_gains(*cfg.observer, nominal);
  StabilityReport rep = analyze_observer(loop_config(cfg, gains), o.inner_loop, o.d_k);
  rep.notes.insert(rep.notes.end(), notes.begin(), notes.end());
  const Json report = to_json(rep);
  if (tune) {
    emit_json(Json{{"gains", to_json(gains)}, {"report", report}}, o, ".json", out);
  } else {
    emit_json(report, o, ".json", out);
  }
  return rep.pass() || o.allow_unstable ? kExitOk : kExitConstraint;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  if (o.scenario.empty() == o.config.empty()) {
    throw ValidationError("simulate needs exactly one of --scenario or --config");
  }
  MetricWindows windows;
  Json doc;
  if (!o.scenario.empty()) {
    const auto m = find_member(o.scenario);
    if (!m) throw ValidationError("unknown scenario '" + o.scenario + "'");
    windows = m->windows;
    doc = scenario_to_json(m->config);
    for (const auto& ov : o.overrides) apply_override(doc, ov);
  } else {
    doc = base_document(o, Json());
  }
  std::vector<std::string> notes;
  apply_flags(doc, o, notes);
  if (o.allow_unstable) doc["allow_unstable"] = true;
  if (o.encoder_counts) doc["measurement"] = Json{{"encoder_counts", *o.encoder_counts}};
  if (o.substeps) doc["substeps"] = *o.substeps;
  const ScenarioConfig cfg = scenario_from_json(doc);

  const SimulationTrace tr = run_closed_loop(cfg);
  const std::string csv = trace_csv(tr);
  if (o.out.empty()) {
    out << csv;
    return kExitOk;
  }
  write_text_file(o.out + ".csv", csv);
  Json j{{"scenario", cfg.name}, {"metrics", to_json(compute_metrics(tr, windows))}};
  j["diverged_at"] = tr.diverged ? Json(tr.diverged_at) : Json(nullptr);
  j["notes"] = notes;
  emit_json(j, o, ".metrics.json", out);
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  Json doc = base_document(o, scenario_to_json(default_scenario()));
  std::vector<std::string> notes;
  apply_flags(doc, o, notes);
  const ScenarioConfig cfg = scenario_from_json(doc);
  const DiscreteServoModel nominal = discretize(cfg.nominal, cfg.Ts);

  SweepTemplate tmpl;
  tmpl.mode = parse_sweep_mode(o.mode);
  ObserverGains gains = tune_zo(nominal, tmpl.l0);
  if (cfg.observer) {
    gains = resolve_gains(*cfg.observer, nominal);
    tmpl.kind = cfg.observer->kind;
    if (gains.free_params.empty()) {
      throw ValidationError("sweeps need an observer given by free parameters or eigenvalues");
    }
    tmpl.l0 = gains.free_params[0];
    if (gains.free_params.size() > 1) tmpl.l1 = gains.free_params[1];
  }
  tmpl.loop = loop_config(cfg, gains);
  if (o.param.empty()) throw ValidationError("sweep needs --param");
  const auto rows = sweep_stability(tmpl, o.param, sweep_values(o), worker_count(o.threads));

  if (!o.out.empty()) {
    std::string csv = "value,spectral_radius,verdict\n";
    for (const auto& r : rows) {
      csv += format_double(r.value) + "," + format_double(r.spectral_radius) + "," +
             to_string(r.verdict) + "\n";
    }
    write_text_file(o.out + ".csv", csv);
  }
  Json j{{"param", o.param}, {"mode", to_string(tmpl.mode)}, {"observer", kind_name(tmpl.kind)},
         {"rows", to_json(rows)}};
  emit_json(j, o, ".json", out);
  return kExitOk;
}

ScenarioConfig order_study_template() {
  ScenarioConfig c = default_scenario();
  c.name = "order-study";
  c.disturbance = SinusoidSignal{1.0, 1.0, 0.0};
  c.duration = 4.0;
  return c;
}

int cmd_order_study(const Options& o, std::ostream& out) {
  Json doc = base_document(o, scenario_to_json(order_study_template()));
  const ScenarioConfig tmpl = scenario_from_json(doc);
  OrderStudyOptions opt;
  opt.Ts = o.ts;
  opt.window_begin = o.window_begin;
  opt.threads = worker_count(o.threads);
  if (o.hold == "zoh") {
    opt.hold = Hold::ZeroOrder;
  } else if (o.hold == "linear") {
    opt.hold = Hold::Linear;
  } else if (o.hold != "none") {
    throw ValidationError("--hold must be zoh, linear or none");
  }
  for (const auto& k : o.kinds) {
    const ObserverKind kind = parse_kind(k);
    opt.kinds.push_back(
        {k, eig_setup(kind, std::vector<double>(static_cast<size_t>(observer_dimension(kind)),
                                                o.radius))});
  }
  Json rows = Json::array();
  for (const auto& r : order_study(tmpl, opt)) rows.push_back(to_json(r));
  emit_json(Json{{"radius", o.radius}, {"hold", o.hold}, {"rows", rows}}, o, ".json", out);
  return kExitOk;
}

int cmd_reproduce(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<PresetScenario> presets;
  if (o.preset == "all") {
    presets = preset_scenarios();
  } else {
    const auto p = find_preset(o.preset);
    if (!p) throw ValidationError("unknown preset '" + o.preset + "'");
    presets.push_back(*p);
  }
  for (auto& p : presets) {
    for (auto& m : p.members) {
      if (o.overrides.empty()) break;
      Json doc = scenario_to_json(m.config);
      for (const auto& ov : o.overrides) apply_override(doc, ov);
      m.config = scenario_from_json(doc);
    }
  }
  Json all = Json::array();
  bool pass = true;
  for (const auto& p : presets) {
    const ReproductionResult r = reproduce(p, worker_count(o.threads));
    const Json j = to_json(r);
    if (!o.out.empty()) {
      write_text_file(o.out + p.name + ".metrics.json", j.dump(2) + "\n");
      for (const auto& m : r.members) {
        write_text_file(o.out + p.name + "." + m.label + ".csv", trace_csv(m.trace));
      }
    }
    for (const auto& c : r.checks) {
      if (!c.pass) err << p.name << ": check failed: " << c.description << "\n";
    }
    pass = pass && r.pass();
    all.push_back(j);
  }
  out << all.dump(2) << "\n";
  return pass ? kExitOk : kExitReproduction;
}

void add_common(CLI::App* c, Options& o) {
  c->add_option("--config", o.config, "JSON config document");
  c->add_option("--out", o.out, "Output path prefix");
  c->add_option("--override", o.overrides, "Dotted key=value applied to the config (repeatable)");
}

void add_observer_flags(CLI::App* c, Options& o) {
  c->add_option("--observer", o.observer, "Observer kind: zo, fo, hp or ho<m>");
  c->add_option("--eig", o.eig, "Desired eigenvalues, comma separated")->delimiter(',');
  c->add_option("--l0", o.l0, "Free parameter l0");
  c->add_option("--l1", o.l1, "Free parameter l1 (FO, HP)");
  c->add_option("--bandwidth", o.bandwidth,
                "Observer bandwidth in rad/s, mapped by l0 = 1 - exp(-g Ts)");
  c->add_option("--alpha", o.alpha, "Inertia ratio J_nominal / J_plant");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Discrete disturbance observer toolkit", "dobctl"};
  app.require_subcommand(1);

  auto* disc = app.add_subcommand("discretize", "Print the ZOH model as JSON");
  add_common(disc, o);

  auto* tune = app.add_subcommand("tune", "Tune observer gains and report stability");
  auto* analyze = app.add_subcommand("analyze", "Stability report for an observer");
  for (auto* c : {tune, analyze}) {
    add_common(c, o);
    add_observer_flags(c, o);
    c->add_flag("--inner-loop", o.inner_loop, "Include the inner-loop constraint");
    c->add_option("--d-k", o.d_k, "Bound on the disturbance-increment residual");
    c->add_flag("--allow-unstable", o.allow_unstable, "Exit 0 even when a constraint fails");
  }

  auto* sim = app.add_subcommand("simulate", "Closed-loop simulation");
  add_common(sim, o);
  add_observer_flags(sim, o);
  sim->add_option("--scenario", o.scenario, "Preset member, e.g. fig5/hp, or zero");
  sim->add_flag("--allow-unstable", o.allow_unstable, "Run configurations that fail the checks");
  sim->add_option("--quantize-encoder", o.encoder_counts, "Encoder counts per revolution");
  sim->add_option("--substeps", o.substeps, "Simpson panels per smooth piece");

  auto* sweep = app.add_subcommand("sweep", "Spectral radius across a parameter");
  add_common(sweep, o);
  add_observer_flags(sweep, o);
  sweep->add_option("--param", o.param, "l0, l1, alpha, Ts, K1, K2, Kp or Kd");
  sweep->add_option("--values", o.values, "Values, comma separated")->delimiter(',');
  sweep->add_option("--from", o.from);
  sweep->add_option("--to", o.to);
  sweep->add_option("--steps", o.steps);
  sweep->add_option("--mode", o.mode, "observer, inner or closed");
  sweep->add_option("--threads", o.threads, "Worker threads (0: all cores)");

  auto* order = app.add_subcommand("order-study", "Estimation error order versus Ts");
  add_common(order, o);
  order->add_option("--ts", o.ts, "Sampling times in seconds, comma separated")->delimiter(',');
  order->add_option("--observers", o.kinds, "Observer kinds, comma separated")->delimiter(',');
  order->add_option("--radius", o.radius, "Common eigenvalue of every observer");
  order->add_option("--hold", o.hold, "Disturbance hold: zoh, linear or none");
  order->add_option("--window-begin", o.window_begin, "Start of the peak-error window (s)");
  order->add_option("--threads", o.threads, "Worker threads (0: all cores)");

  auto* repro = app.add_subcommand("reproduce", "Run a preset and check its ordinal claims");
  repro->add_option("preset", o.preset, "fig4a, fig4b, fig5, fig6, fig7 or all")->required();
  repro->add_option("--out", o.out, "Output path prefix");
  repro->add_option("--override", o.overrides, "Dotted key=value applied to every member");
  repro->add_option("--threads", o.threads, "Worker threads (0: all cores)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (disc->parsed()) return cmd_discretize(o, out);
    if (tune->parsed()) return cmd_tune_analyze(o, true, out);
    if (analyze->parsed()) return cmd_tune_analyze(o, false, out);
    if (sim->parsed()) return cmd_simulate(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
    if (order->parsed()) return cmd_order_study(o, out);
    if (repro->parsed()) return cmd_reproduce(o, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConstraintViolation& e) {
    err << "constraint violation: " << e.what() << "\n";
    return kExitConstraint;
  } catch (const ConvergenceError& e) {
    err << "did not converge: " << e.what() << " (residual " << format_double(e.residual())
        << ")\n";
    return kExitConstraint;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace dob::cli
