#include "dob/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dob/errors.hpp"

namespace dob {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Strict view of a JSON object: every key must be consumed before finish().
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json* child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  double number(const std::string& key, double def) {
    const Json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_number()) throw ValidationError(where(key) + " must be a number");
    return v->get<double>();
  }

  double number(const std::string& key) {
    if (!has(key)) throw ValidationError(where(key) + " is required");
    return number(key, 0.0);
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) {
      used_.insert(key);
      return std::nullopt;
    }
    return number(key);
  }

  int integer(const std::string& key, int def) {
    const Json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_number_integer()) throw ValidationError(where(key) + " must be an integer");
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool def) {
    const Json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_boolean()) throw ValidationError(where(key) + " must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    const Json* v = child(key);
    if (v == nullptr) return def;
    if (!v->is_string()) throw ValidationError(where(key) + " must be a string");
    return v->get<std::string>();
  }

  std::string string(const std::string& key) {
    if (!has(key)) throw ValidationError(where(key) + " is required");
    return string(key, "");
  }

  std::vector<double> numbers(const std::string& key) {
    const Json* v = child(key);
    if (v == nullptr) throw ValidationError(where(key) + " is required");
    if (!v->is_array()) throw ValidationError(where(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) throw ValidationError(where(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "document" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ValidationError("unknown key '" + where(key) + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

ContinuousServoModel model_from(const Json& j, const std::string& path) {
  Reader r(j, path);
  const double J = r.number("J");
  const double b = r.number("b");
  r.finish();
  return ContinuousServoModel::make(J, b);
}

Json model_json(const ContinuousServoModel& m) {
  return Json{{"J", m.inertia}, {"b", m.viscous_friction}};
}

Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json mat_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

std::string hold_name(Hold h) { return h == Hold::ZeroOrder ? "zoh" : "linear"; }

Hold parse_hold(const std::string& s, const std::string& where) {
  if (s == "zoh") return Hold::ZeroOrder;
  if (s == "linear") return Hold::Linear;
  throw ValidationError(where + " must be \"zoh\" or \"linear\"");
}

std::string wave_name(Wave w) { return w == Wave::Sin ? "sin" : "cos"; }

DisturbanceSignal disturbance_from(const Json& j, const std::string& path) {
  Reader r(j, path);
  const std::string type = r.string("type");
  DisturbanceSignal out;
  if (type == "zero") {
    out = ZeroSignal{};
  } else if (type == "constant") {
    ConstantSignal s;
    s.level = r.number("level");
    s.t_on = r.optional_number("t_on").value_or(kNever);
    out = s;
  } else if (type == "ramp") {
    RampSignal s;
    s.slope = r.number("slope");
    s.t_on = r.number("t_on", 0.0);
    out = s;
  } else if (type == "sinusoid") {
    out = SinusoidSignal{r.number("amplitude"), r.number("frequency_hz"), r.number("phase", 0.0)};
  } else if (type == "multisine") {
    if (r.has("preset")) {
      const std::string preset = r.string("preset");
      if (preset != "test-profile") {
        throw ValidationError(r.where("preset") + " must be \"test-profile\"");
      }
      out = multisine_test_profile();
    } else {
      MultiSineSignal s;
      s.t_on = r.number("t_on");
      s.t_off = r.number("t_off");
      const Json* terms = r.child("terms");
      if (terms == nullptr || !terms->is_array()) {
        throw ValidationError(r.where("terms") + " must be an array");
      }
      for (size_t i = 0; i < terms->size(); ++i) {
        const std::string tp = r.where("terms") + "[" + std::to_string(i) + "]";
        Reader tr((*terms)[i], tp);
        ProductTerm term;
        term.amplitude = tr.number("amplitude");
        const Json* factors = tr.child("factors");
        if (factors == nullptr || !factors->is_array()) {
          throw ValidationError(tp + ".factors must be an array");
        }
        for (size_t f = 0; f < factors->size(); ++f) {
          const std::string fp = tp + ".factors[" + std::to_string(f) + "]";
          Reader fr((*factors)[f], fp);
          const std::string wave = fr.string("wave");
          if (wave != "sin" && wave != "cos") throw ValidationError(fp + ".wave must be sin or cos");
          term.factors.push_back(
              {wave == "sin" ? Wave::Sin : Wave::Cos, fr.number("rate"), fr.number("phase", 0.0)});
          fr.finish();
        }
        tr.finish();
        s.terms.push_back(std::move(term));
      }
      out = s;
    }
  } else if (type == "sampled") {
    SampledSignal s;
    s.t0 = r.number("t0", 0.0);
    s.period = r.number("period");
    s.samples = r.numbers("samples");
    s.hold = parse_hold(r.string("hold", "zoh"), r.where("hold"));
    out = s;
  } else {
    throw ValidationError(r.where("type") +
                          " must be zero, constant, ramp, sinusoid, multisine or sampled");
  }
  r.finish();
  validate(out);
  return out;
}

Json disturbance_json(const DisturbanceSignal& d) {
  return std::visit(
      Overloaded{
          [](const ZeroSignal&) { return Json{{"type", "zero"}}; },
          [](const ConstantSignal& s) {
            Json j{{"type", "constant"}, {"level", s.level}};
            j["t_on"] = std::isinf(s.t_on) ? Json(nullptr) : Json(s.t_on);
            return j;
          },
          [](const RampSignal& s) {
            return Json{{"type", "ramp"}, {"slope", s.slope}, {"t_on", s.t_on}};
          },
          [](const SinusoidSignal& s) {
            return Json{{"type", "sinusoid"},
                        {"amplitude", s.amplitude},
                        {"frequency_hz", s.frequency_hz},
                        {"phase", s.phase}};
          },
          [](const MultiSineSignal& s) {
            Json terms = Json::array();
            for (const auto& t : s.terms) {
              Json factors = Json::array();
              for (const auto& f : t.factors) {
                factors.push_back(
                    Json{{"wave", wave_name(f.wave)}, {"rate", f.angular_rate}, {"phase", f.phase}});
              }
              terms.push_back(Json{{"amplitude", t.amplitude}, {"factors", factors}});
            }
            return Json{{"type", "multisine"}, {"t_on", s.t_on}, {"t_off", s.t_off}, {"terms", terms}};
          },
          [](const SampledSignal& s) {
            return Json{{"type", "sampled"},
                        {"t0", s.t0},
                        {"period", s.period},
                        {"samples", s.samples},
                        {"hold", hold_name(s.hold)}};
          },
      },
      d);
}

ReferenceSignal reference_from(const Json& j, const std::string& path) {
  Reader r(j, path);
  const std::string type = r.string("type");
  ReferenceSignal out;
  if (type == "zero") {
    out = ZeroReference{};
  } else if (type == "step") {
    out = StepReference{r.number("amplitude"), r.number("t_on", 0.0)};
  } else if (type == "sinusoid") {
    out = SinusoidReference{r.number("amplitude"), r.number("frequency_hz"), r.number("t_on", 0.0),
                            r.number("t_off")};
  } else {
    throw ValidationError(r.where("type") + " must be zero, step or sinusoid");
  }
  r.finish();
  validate(out);
  return out;
}

Json reference_json(const ReferenceSignal& ref) {
  return std::visit(Overloaded{
                        [](const ZeroReference&) { return Json{{"type", "zero"}}; },
                        [](const StepReference& s) {
                          return Json{{"type", "step"}, {"amplitude", s.amplitude}, {"t_on", s.t_on}};
                        },
                        [](const SinusoidReference& s) {
                          return Json{{"type", "sinusoid"},
                                      {"amplitude", s.amplitude},
                                      {"frequency_hz", s.frequency_hz},
                                      {"t_on", s.t_on},
                                      {"t_off", s.t_off}};
                        },
                    },
                    ref);
}

ObserverSetup observer_from(const Json& j, const std::string& path) {
  Reader r(j, path);
  ObserverSetup s;
  s.kind = parse_kind(r.string("kind"));
  const int sources = (r.has("l0") ? 1 : 0) + (r.has("eig") ? 1 : 0) + (r.has("gains") ? 1 : 0);
  if (sources != 1) {
    throw ValidationError(r.where() + " needs exactly one of l0 (with l1), eig, gains");
  }
  if (r.has("l0")) {
    s.source = ObserverSetup::Source::FreeParams;
    s.values.push_back(r.number("l0"));
    if (observer_dimension(s.kind) == 2) s.values.push_back(r.number("l1"));
  } else if (r.has("eig")) {
    s.source = ObserverSetup::Source::Eigenvalues;
    s.values = r.numbers("eig");
  } else {
    s.source = ObserverSetup::Source::Explicit;
    const Json* g = r.child("gains");
    if (!g->is_array()) throw ValidationError(r.where("gains") + " must be an array of pairs");
    for (const auto& e : *g) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw ValidationError(r.where("gains") + " must be an array of [a, b] pairs");
      }
      s.gains.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  }
  r.finish();
  return s;
}

Json observer_json(const ObserverSetup& s) {
  Json j{{"kind", kind_name(s.kind)}};
  switch (s.source) {
    case ObserverSetup::Source::FreeParams:
      j["l0"] = s.values.at(0);
      if (s.values.size() > 1) j["l1"] = s.values[1];
      break;
    case ObserverSetup::Source::Eigenvalues:
      j["eig"] = s.values;
      break;
    case ObserverSetup::Source::Explicit: {
      Json g = Json::array();
      for (const auto& l : s.gains) g.push_back(Json::array({l(0), l(1)}));
      j["gains"] = g;
      break;
    }
  }
  return j;
}

void check_schema(Reader& r) {
  const Json* v = r.child("schema_version");
  if (v == nullptr) throw ValidationError("schema_version is required");
  if (!v->is_number_integer() || v->get<int>() != kSchemaVersion) {
    throw ValidationError("unsupported schema_version (expected " + std::to_string(kSchemaVersion) +
                          ")");
  }
}

Json complex_json(std::complex<double> c) {
  if (c.imag() == 0.0) return Json(c.real());
  return Json{{"re", c.real()}, {"im", c.imag()}};
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv(const SimulationTrace& tr) {
  std::string out = "k,t,q,dq,q_ref,u_p,u,tau_d,tau_hat,tau_hat_dot,est_error,tracking_error\n";
  out.reserve(tr.size() * 220);
  const bool rate = !tr.tau_hat_dot.empty();
  for (size_t i = 0; i < tr.size(); ++i) {
    out += std::to_string(tr.k[i]);
    for (double v : {tr.t[i], tr.q[i], tr.dq[i], tr.q_ref[i], tr.u_p[i], tr.u[i], tr.tau_d[i],
                     tr.tau_hat[i]}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    if (rate) out += format_double(tr.tau_hat_dot[i]);
    out += ',';
    out += format_double(tr.est_error[i]);
    out += ',';
    out += format_double(tr.tracking_error[i]);
    out += '\n';
  }
  return out;
}

Json to_json(const Eigenvalues& eig) {
  Json a = Json::array();
  for (const auto& l : eig) a.push_back(complex_json(l));
  return a;
}

Json to_json(const DiscreteServoModel& d) {
  return Json{{"J", d.source.inertia},
              {"b", d.source.viscous_friction},
              {"Ts", d.Ts},
              {"A_D", mat_json(d.A)},
              {"B_D", vec_json(d.B)},
              {"D_D", vec_json(d.D)},
              {"D_tilde_D", vec_json(d.D_tilde)}};
}

Json to_json(const ObserverGains& g) {
  Json L = Json::array();
  for (const auto& l : g.L) L.push_back(vec_json(l));
  return Json{{"kind", kind_name(g.kind)}, {"L", L}, {"free_params", g.free_params}};
}

Json to_json(const LyapunovCertificate& c) {
  return Json{{"P", mat_json(c.P)},
              {"Q", mat_json(c.Q)},
              {"kappa_e", c.kappa_e},
              {"kappa_d", c.kappa_d},
              {"d_k", c.d_k},
              {"bound_radius", c.bound_radius},
              {"invariant_radius", c.invariant_radius},
              {"asymptotic", c.asymptotic}};
}

Json to_json(const StabilityReport& r) {
  Json j;
  j["pass"] = r.pass();
  j["observer"] = to_json(r.gains);
  j["Gamma"] = mat_json(r.Gamma);
  j["eigenvalues"] = to_json(r.observer_eigenvalues);
  j["spectral_radius"] = r.spectral_radius;
  j["open_loop_pass"] = r.open_loop_pass;
  if (r.inner_loop) {
    j["inner_loop"] = Json{{"alpha", r.inner_loop->alpha},
                           {"eigenvalues", to_json(r.inner_loop->eigenvalues)},
                           {"verdict", to_string(r.inner_loop->verdict)}};
  } else {
    j["inner_loop"] = nullptr;
  }
  Json cons = Json::array();
  for (const auto& c : r.constraints) {
    cons.push_back(Json{{"name", c.name}, {"expression", c.expression}, {"value", c.value},
                        {"pass", c.pass}});
  }
  j["constraints"] = cons;
  j["certificate"] = r.certificate ? to_json(*r.certificate) : Json(nullptr);
  j["notes"] = r.notes;
  return j;
}

Json to_json(const Metrics& m) {
  Json j{{"rms_tracking", m.rms_tracking},
         {"steady_state_error", m.steady_state_error},
         {"rms_est_error", m.rms_est_error},
         {"peak_est_error", m.peak_est_error}};
  j["rms_rate_error"] = m.rms_rate_error ? Json(*m.rms_rate_error) : Json(nullptr);
  j["rms_rate"] = m.rms_rate ? Json(*m.rms_rate) : Json(nullptr);
  j["diverged"] = m.diverged;
  return j;
}

Json to_json(const ReproductionResult& r) {
  Json members = Json::array();
  for (const auto& m : r.members) {
    Json e{{"label", m.label}, {"metrics", to_json(m.metrics)}};
    e["constraints_pass"] = m.constraints_pass ? Json(*m.constraints_pass) : Json(nullptr);
    e["diverged_at"] = m.trace.diverged ? Json(m.trace.diverged_at) : Json(nullptr);
    members.push_back(e);
  }
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back(
        Json{{"description", c.description}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}});
  }
  return Json{{"name", r.name}, {"pass", r.pass()}, {"checks", checks}, {"members", members},
              {"notes", r.notes}};
}

Json to_json(const OrderStudyRow& r) {
  Json j{{"label", r.label}, {"Ts", r.Ts}, {"peak_error", r.peak_error}};
  j["slope"] = r.slope ? Json(*r.slope) : Json(nullptr);
  j["notes"] = r.notes;
  return j;
}

Json to_json(const std::vector<SweepRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows) {
    a.push_back(Json{{"value", r.value},
                     {"spectral_radius", r.spectral_radius},
                     {"verdict", to_string(r.verdict)}});
  }
  return a;
}

ModelConfig model_config_from_json(const Json& doc) {
  Reader r(doc, "");
  check_schema(r);
  ModelConfig c;
  const double J = r.number("J", c.model.inertia);
  const double b = r.number("b", c.model.viscous_friction);
  c.Ts = r.number("Ts", c.Ts);
  r.finish();
  c.model = ContinuousServoModel::make(J, b);
  if (!std::isfinite(c.Ts) || !(c.Ts > 0.0)) {
    throw ValidationError("Ts must be positive (got " + format_double(c.Ts) + ")");
  }
  return c;
}

ScenarioConfig scenario_from_json(const Json& doc) {
  Reader r(doc, "");
  check_schema(r);
  ScenarioConfig c = default_scenario();
  c.name = r.string("name", "scenario");

  if (const Json* loop = r.child("loop")) {
    Reader lr(*loop, "loop");
    c.Ts = lr.number("Ts", c.Ts);
    if (const Json* n = lr.child("nominal")) c.nominal = model_from(*n, "loop.nominal");
    const Json* plant = lr.child("plant");
    const auto alpha = lr.optional_number("alpha");
    if (plant != nullptr && alpha) {
      throw ValidationError("loop.plant and loop.alpha are mutually exclusive");
    }
    if (plant != nullptr) {
      c.plant = model_from(*plant, "loop.plant");
    } else {
      c.plant = plant_for_alpha(c.nominal, alpha.value_or(1.0));
    }
    const std::string outer = lr.string("outer", "pd");
    if (outer == "pd") {
      c.outer = OuterLoop::PD;
    } else if (outer == "state-feedback") {
      c.outer = OuterLoop::StateFeedback;
    } else {
      throw ValidationError("loop.outer must be \"pd\" or \"state-feedback\"");
    }
    c.Kp = lr.number("Kp", c.Kp);
    c.Kd = lr.number("Kd", c.Kd);
    c.K_tilde(0) = lr.number("K1", 0.0);
    c.K_tilde(1) = lr.number("K2", 0.0);
    lr.finish();
  }
  if (const Json* o = r.child("observer")) c.observer = observer_from(*o, "observer");
  c.disturbance_feedback = r.boolean("disturbance_feedback", true);
  if (const Json* ref = r.child("reference")) c.reference = reference_from(*ref, "reference");
  if (const Json* d = r.child("disturbance")) c.disturbance = disturbance_from(*d, "disturbance");
  const std::string hold = r.string("disturbance_hold", "none");
  if (hold != "none") c.disturbance_hold = parse_hold(hold, "disturbance_hold");
  c.duration = r.number("duration", c.duration);
  if (const Json* m = r.child("measurement")) {
    Reader mr(*m, "measurement");
    if (mr.has("encoder_counts")) c.encoder_counts = mr.integer("encoder_counts", 0);
    mr.child("encoder_counts");
    mr.finish();
  }
  c.substeps = r.integer("substeps", c.substeps);
  c.allow_unstable = r.boolean("allow_unstable", false);
  if (const Json* init = r.child("initial")) {
    Reader ir(*init, "initial");
    c.initial.q = ir.number("q", 0.0);
    c.initial.dq = ir.number("dq", 0.0);
    ir.finish();
  }
  c.torque_gain = r.number("torque_gain", c.torque_gain);
  r.finish();
  validate(c);
  return c;
}

Json scenario_to_json(const ScenarioConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;
  Json loop{{"Ts", c.Ts},
            {"nominal", model_json(c.nominal)},
            {"plant", model_json(c.plant)},
            {"outer", c.outer == OuterLoop::PD ? "pd" : "state-feedback"},
            {"Kp", c.Kp},
            {"Kd", c.Kd},
            {"K1", c.K_tilde(0)},
            {"K2", c.K_tilde(1)}};
  j["loop"] = loop;
  j["observer"] = c.observer ? observer_json(*c.observer) : Json(nullptr);
  j["disturbance_feedback"] = c.disturbance_feedback;
  j["reference"] = reference_json(c.reference);
  j["disturbance"] = disturbance_json(c.disturbance);
  j["disturbance_hold"] = c.disturbance_hold ? hold_name(*c.disturbance_hold) : "none";
  j["duration"] = c.duration;
  j["measurement"] =
      Json{{"encoder_counts", c.encoder_counts ? Json(*c.encoder_counts) : Json(nullptr)}};
  j["substeps"] = c.substeps;
  j["allow_unstable"] = c.allow_unstable;
  j["initial"] = Json{{"q", c.initial.q}, {"dq", c.initial.dq}};
  j["torque_gain"] = c.torque_gain;
  return j;
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ValidationError("override path '" + path + "' has an empty segment");
    parts.push_back(part);
  }
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ValidationError("override path '" + path + "' crosses a non-object");
    if (!node->contains(parts[i]) || (*node)[parts[i]].is_null()) (*node)[parts[i]] = Json::object();
    node = &(*node)[parts[i]];
  }
  if (!node->is_object()) throw ValidationError("override path '" + path + "' crosses a non-object");
  (*node)[parts.back()] = value;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace dob
