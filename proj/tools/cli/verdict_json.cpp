#include "verdict_json.hpp"

#include <cmath>

namespace invreg::cli {
namespace {

nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json to_json(const Check& check) {
  nlohmann::json j;
  j["name"] = check.name;
  j["status"] = to_string(check.status);
  j["passed"] = check.passed();
  j["informational"] = check.informational;
  j["measured"] = number_or_null(check.measured);
  j["relation"] = check.relation;
  j["threshold"] = number_or_null(check.threshold);
  j["worst_time"] = check.worst_time ? number_or_null(*check.worst_time) : nlohmann::json(nullptr);
  if (check.worst_location) {
    nlohmann::json loc = nlohmann::json::array();
    for (double v : *check.worst_location) loc.push_back(number_or_null(v));
    j["worst_location"] = std::move(loc);
  } else {
    j["worst_location"] = nullptr;
  }
  j["note"] = check.note;
  nlohmann::json details = nlohmann::json::object();
  for (const auto& [key, value] : check.details) details[key] = number_or_null(value);
  j["details"] = std::move(details);
  return j;
}

nlohmann::json to_json(const Verdict& verdict) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : verdict.checks) checks.push_back(to_json(c));
  return {{"passed", verdict.passed()}, {"checks", std::move(checks)}};
}

nlohmann::json verdict_document(const std::string& scenario, const ControllerMode& mode,
                                const std::optional<Verdict>& assumptions,
                                const std::optional<Verdict>& diagnostics) {
  nlohmann::json doc;
  doc["schema_version"] = kVerdictSchemaVersion;
  doc["scenario"] = scenario;
  doc["mode"] = to_string(mode.variant);
  bool passed = true;
  if (assumptions) {
    doc["assumptions"] = to_json(*assumptions);
    passed = passed && assumptions->passed();
  }
  if (diagnostics) {
    doc["diagnostics"] = to_json(*diagnostics);
    passed = passed && diagnostics->passed();
  }
  doc["passed"] = passed;
  return doc;
}

std::string dump(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

}  // namespace invreg::cli
