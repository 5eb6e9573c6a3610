#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "flyer/corridor.hpp"
#include "flyer/errors.hpp"
#include "flyer/types.hpp"

namespace flyer {

enum class CargoVariant { None, Constraint, Composite, Articulated };

std::string to_string(CargoVariant v);
/// Accepts "none", "constraint", "composite", "articulated".
CargoVariant parse_cargo_variant(const std::string& name);

/// Compliant grip between the robot and the first cargo body.
struct AttachmentParams {
  double linear_stiffness = 500.0;  // N/m
  double linear_damping = 5.0;      // N*s/m
  double angular_stiffness = 2.0;   // N*m/rad
  double angular_damping = 0.02;    // N*m*s/rad
  Vec3 grip_point_robot = Vec3(-0.3, 0.0, 0.0);  // robot frame
  Vec3 grip_point_bag = Vec3(0.25, 0.0, 0.0);    // bag frame
  double breaking_force = std::numeric_limits<double>::infinity();  // N

  void validate() const;
};

/// Spring-damper between bodies inside the cargo (composite and articulated).
struct InternalLinkParams {
  double linear_stiffness = 1000.0;
  double linear_damping = 10.0;
  double angular_stiffness = 5.0;
  double angular_damping = 0.05;

  void validate() const;
};

struct CargoModel {
  CargoVariant variant = CargoVariant::None;
  /// Whole bag: total mass, inertia, and the collision radius of a one-body bag.
  BodyParams bag{5.0, Vec3(0.125, 0.125, 0.125), 0.25};
  AttachmentParams attachment;
  /// Handle block used by the composite and articulated variants.
  BodyParams handle{0.5, Vec3(1e-3, 1e-3, 1e-3), 0.06};
  InternalLinkParams internal;

  void validate() const;

  static CargoModel none() { return {}; }
  static CargoModel constraint();
  static CargoModel composite();
  static CargoModel articulated();
};

/// Generic spring-damper joint between two bodies (index 0 is the robot).
struct SpringJoint {
  std::size_t parent = 0;
  std::size_t child = 0;
  Vec3 anchor_parent = Vec3::Zero();  // parent body frame
  Vec3 anchor_child = Vec3::Zero();   // child body frame
  double linear_stiffness = 0.0;
  double linear_damping = 0.0;
  double angular_stiffness = 0.0;
  double angular_damping = 0.0;
  /// Child orientation relative to parent at rest.
  UnitQuaternion rest_relative;
  double breaking_force = std::numeric_limits<double>::infinity();
};

struct SimState {
  RigidState robot;
  std::vector<RigidState> bag;
  std::vector<bool> joint_broken;
  double time = 0.0;
  std::uint64_t steps = 0;

  bool operator==(const SimState&) const = default;
};

/// Opaque full copy of a SimState; restore() yields an independent state.
class Snapshot {
 public:
  explicit Snapshot(SimState s) : state_(std::move(s)) {}
  SimState restore() const { return state_; }

 private:
  SimState state_;
};

inline Snapshot snapshot(const SimState& s) { return Snapshot(s); }
inline SimState restore(const Snapshot& sn) { return sn.restore(); }

struct SimConfig {
  BodyParams robot;
  ActuatorLimits limits;
  CargoModel cargo;
  double dt = 0.005;  // s
};

/// Per-body margins: entry 0 is the robot, then the cargo bodies.
struct CollisionReport {
  std::vector<double> margins;
  std::vector<bool> colliding;

  double min_margin() const;
  std::size_t collision_count() const;
};

/// Reduced-order free-flyer with optional compliant cargo.
///
/// Every body is a double integrator in translation and attitude: forces act
/// on the center of mass, torques through a constant world-axes diagonal
/// inertia (no gyroscopic coupling). Integration is semi-implicit Euler.
class Dynamics {
 public:
  static constexpr double kMaxDt = 0.05;
  static constexpr double kMaxRelativeAngle = 3.141592653589793 - 0.1;

  /// Throws std::invalid_argument on invalid parameters or when config.dt
  /// exceeds stable_dt() for some joint.
  explicit Dynamics(SimConfig config);

  const SimConfig& config() const { return config_; }
  const std::vector<BodyParams>& bodies() const { return bodies_; }
  const std::vector<SpringJoint>& joints() const { return joints_; }
  std::size_t cargo_body_count() const { return bodies_.size() - 1; }

  /// Cargo bodies placed at their rest pose relative to `robot`, moving with
  /// the robot's rigid-body velocity field.
  SimState neutral_state(const RigidState& robot) const;

  /// Saturates u, then advances by dt. Throws std::invalid_argument for dt
  /// outside (0, min(kMaxDt, config.dt)] or a non-finite input, and
  /// SimulationError on a non-finite result or a degenerate joint angle.
  SimState step(const SimState& s, const Wrench& u, double dt) const;
  SimState step(const SimState& s, const Wrench& u) const { return step(s, u, config_.dt); }

  /// Kinetic energy plus stored spring energy of intact joints.
  double energy(const SimState& s) const;
  Vec3 linear_momentum(const SimState& s) const;
  /// Mass-weighted cargo velocity; zero without cargo.
  Vec3 cargo_velocity(const SimState& s) const;
  /// Force currently applied by joint j on its child body.
  Vec3 joint_force(const SimState& s, std::size_t j) const;

  /// Largest admissible dt: min over bodies of 0.2 * 2*pi / omega_n and of
  /// m_eff / c, with omega_n^2 and c / m_eff summed over the joints at the body.
  double stable_dt() const;

 private:
  SimConfig config_;
  std::vector<BodyParams> bodies_;
  std::vector<SpringJoint> joints_;
  /// Rest pose of each cargo body in the robot frame.
  std::vector<Vec3> rest_offset_;
  std::vector<UnitQuaternion> rest_orientation_;
};

/// margin = safety_margin(c, body center) - collision radius per body.
CollisionReport collision_report(const Dynamics& dyn, const SimState& s, const Corridor& c);

}  // namespace flyer
