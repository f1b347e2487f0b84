#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dob/scenarios.hpp"
#include "dob/servo_model.hpp"
#include "dob/simulation.hpp"
#include "dob/stability.hpp"

namespace dob {

using Json = nlohmann::ordered_json;

/// Current version of the config documents below.
inline constexpr int kSchemaVersion = 1;

/// printf("%.17g"); round-trips every double.
std::string format_double(double v);

std::string trace_csv(const SimulationTrace& trace);

Json to_json(const Eigenvalues& eig);
Json to_json(const DiscreteServoModel& d);
Json to_json(const ObserverGains& g);
Json to_json(const LyapunovCertificate& c);
Json to_json(const StabilityReport& r);
Json to_json(const Metrics& m);
Json to_json(const ReproductionResult& r);
Json to_json(const OrderStudyRow& r);
Json to_json(const std::vector<SweepRow>& rows);

/// Model document: {"schema_version": 1, "J": .., "b": .., "Ts": ..}.
struct ModelConfig {
  ContinuousServoModel model = ContinuousServoModel::make(5e-3, 1e-2);
  double Ts = 1e-3;
};
ModelConfig model_config_from_json(const Json& doc);

/// Scenario document. Unknown keys, wrong types, or a missing/unsupported
/// schema_version throw ValidationError naming the offending path.
ScenarioConfig scenario_from_json(const Json& doc);
Json scenario_to_json(const ScenarioConfig& cfg);

/// Applies "a.b.c=V" to doc. V is parsed as JSON when possible, otherwise
/// taken as a string; the schema check happens when the document is parsed.
void apply_override(Json& doc, const std::string& assignment);

Json read_json_file(const std::string& path);
/// Creates missing parent directories.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dob
