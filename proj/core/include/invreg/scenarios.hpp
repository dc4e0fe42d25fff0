#pragma once

// Built-in benchmark scenarios and construction of scenarios from a JSON
// configuration tree.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "invreg/diagnostics.hpp"
#include "invreg/integrate.hpp"
#include "invreg/models.hpp"

namespace invreg {

inline constexpr int kConfigSchemaVersion = 1;

struct InitialCondition {
  Vector x0;
  Vector theta0;
  Vector theta_hat0;
  Vector xi0;
  Vector nu0;
  /// xi = x, nu = theta and theta_hat = theta at t0.
  bool identity_init = false;
};

/// Unvalidated scenario ingredients. Building a Scenario from it factors H,
/// so an indefinite H surfaces only in build().
struct ScenarioSpec {
  std::string name;
  PlantModel plant;
  DriftModel drift;
  TargetSpec target;
  ControllerMode mode;
  InitialCondition init;
  IntegrationConfig integration;
  DiagnosticsConfig diagnostics;
  /// Assumption identifiers certified analytically by the scenario author.
  std::vector<std::string> asserted_assumptions;
};

struct Scenario {
  std::string name;
  Models models;
  ControllerMode mode;
  SimState s0;
  IntegrationConfig integration;
  DiagnosticsConfig diagnostics;
  std::vector<std::string> asserted_assumptions;
};

/// scalar-equilibrium, hopf-circle, hopf-circle-drift, hopf-circle-kappa-zero.
const std::vector<std::string>& builtin_names();

/// Throws UnknownScenario.
ScenarioSpec builtin_spec(const std::string& name);
Scenario builtin(const std::string& name);

/// Validates the spec and assembles models and the initial state. theta_hat_i
/// at t0 is chosen so that theta_hat(t0) equals init.theta_hat0. Throws
/// DimensionMismatch, InvalidArgument, NotSymmetric or NotPositiveDefinite.
Scenario build(const ScenarioSpec& spec);

/// Reads a configuration tree into a spec. Throws SchemaError listing every
/// problem with its field path.
ScenarioSpec parse_config(const nlohmann::json& config);

/// parse_config followed by build.
Scenario from_config(const nlohmann::json& config);

}  // namespace invreg
