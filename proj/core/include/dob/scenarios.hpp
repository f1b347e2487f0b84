#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dob/simulation.hpp"

namespace dob {

/// Project default plant (J = 5e-3 kg m^2, b = 1e-2 N m s/rad), Ts = 1 ms,
/// PD gains Kp = 2.5, Kd = 0.25. The plant values are a convention of this
/// toolkit, not measured rig data.
ScenarioConfig default_scenario();

/// Default scenario with the plant inertia and friction divided by alpha.
ScenarioConfig with_alpha(ScenarioConfig cfg, double alpha);

ObserverSetup zo_setup(double l0);
ObserverSetup eig_setup(const ObserverKind& kind, std::vector<double> eig);

struct ScenarioMember {
  std::string label;
  ScenarioConfig config;
  MetricWindows windows;
};

struct PresetScenario {
  std::string name;
  std::string description;
  std::vector<ScenarioMember> members;
};

/// Fixed order: fig4a, fig4b, fig5, fig6, fig7.
std::vector<PresetScenario> preset_scenarios();
/// Accepts the full name ("fig5-hp-vs-zo") or its short prefix ("fig5").
std::optional<PresetScenario> find_preset(const std::string& name);
/// "zero" or "<preset>/<member>".
std::optional<ScenarioMember> find_member(const std::string& name);

struct OrdinalCheck {
  std::string description;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct MemberResult {
  std::string label;
  SimulationTrace trace;
  Metrics metrics;
  /// Whether the configuration satisfies its stability constraints.
  std::optional<bool> constraints_pass;
};

struct ReproductionResult {
  std::string name;
  std::vector<MemberResult> members;
  std::vector<OrdinalCheck> checks;
  std::vector<std::string> notes;

  bool pass() const;
  const MemberResult& member(const std::string& label) const;
};

ReproductionResult reproduce(const PresetScenario& preset, int threads = 1);

}  // namespace dob
