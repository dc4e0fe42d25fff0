#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "invreg/diagnostics.hpp"

namespace invreg::cli {

inline constexpr int kVerdictSchemaVersion = 1;

nlohmann::json to_json(const Check& check);
nlohmann::json to_json(const Verdict& verdict);

/// Top-level verdict document. Either section may be absent (verify writes
/// assumptions only).
nlohmann::json verdict_document(const std::string& scenario, const ControllerMode& mode,
                                const std::optional<Verdict>& assumptions,
                                const std::optional<Verdict>& diagnostics);

/// Pretty-printed with a trailing newline.
std::string dump(const nlohmann::json& doc);

}  // namespace invreg::cli
