#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flyer/control.hpp"
#include "flyer/corridor.hpp"
#include "flyer/errors.hpp"
#include "flyer/planner_global.hpp"
#include "flyer/simdyn.hpp"

namespace flyer {

enum class ControllerKind { Pd, Mpc };

std::string to_string(ControllerKind k);
/// Accepts "pd" and "mpc".
ControllerKind parse_controller_kind(const std::string& name);

/// Everything one run needs. Loaded from a JSON document whose field names
/// carry their units; see README for the schema.
struct Scenario {
  std::string name = "scenario";
  std::vector<Aabb> boxes;
  /// Walls are moved inward by this much before planning the robot center.
  double planning_clearance = 0.26;  // m
  SimConfig sim;
  /// Cargo model used inside MPC rollouts; the plant cargo when unset.
  std::optional<CargoVariant> rollout_cargo;
  RigidState start;
  RigidState goal;

  int degree = 7;
  int max_scp_iters = 25;
  double trust_region = 0.2;
  int limit_subdivisions = 4;
  OrientationMode orientation_mode = OrientationMode::Polynomial;

  ControllerKind controller = ControllerKind::Pd;
  double control_dt = 0.05;   // s
  double settle_time = 5.0;  // s, simulated after the plan ends
  PdGains gains;
  /// MPC settings; control_dt, gains and rng_seed are overwritten from the fields above.
  MpcConfig mpc;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  Corridor corridor() const { return Corridor(boxes); }
  Corridor planning_corridor() const { return corridor().shrunk(planning_clearance); }
  PlanRequest plan_request() const;
  MpcConfig mpc_config() const;
  SimConfig rollout_config() const;
};

/// The document failed structural or physical validation; what() lists every violation.
class ScenarioError : public Error {
 public:
  explicit ScenarioError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Parses and cross-validates. Throws ScenarioError.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

/// Every structural and physical violation, without running anything. Empty when valid.
std::vector<std::string> validate_scenario_text(const std::string& json_text);
std::vector<std::string> validate_scenario(const std::string& path);

}  // namespace flyer
