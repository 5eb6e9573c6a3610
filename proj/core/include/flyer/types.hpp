#pragma once

#include "flyer/quaternion.hpp"

namespace flyer {

/// Pose and twist of a free-flying body. Angular velocity is expressed in the
/// world frame throughout the library.
struct RigidState {
  Vec3 position = Vec3::Zero();
  UnitQuaternion orientation;
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();

  bool is_finite() const;
  bool operator==(const RigidState&) const = default;
};

/// A RigidState together with the second-order data a planner needs at a
/// boundary or a controller needs as feedforward.
struct KinematicState {
  RigidState state;
  Vec3 linear_acceleration = Vec3::Zero();
  Vec3 angular_acceleration = Vec3::Zero();
};

/// Force and torque, both in the world frame, applied at the body's center of mass.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  bool is_finite() const;
  bool operator==(const Wrench&) const = default;
};

struct ActuatorLimits {
  double max_force = 0.85;             // N
  double max_torque = 0.085;           // N*m
  double max_velocity = 0.5;           // m/s
  double max_acceleration = 0.1;       // m/s^2
  double max_angular_velocity = 0.45;  // rad/s

  /// Throws std::invalid_argument unless every limit is finite and > 0.
  void validate() const;
};

struct BodyParams {
  double mass = 9.58;                                // kg
  Vec3 inertia_diagonal = Vec3(0.153, 0.143, 0.162);  // kg*m^2
  double collision_radius = 0.26;                    // m

  void validate() const;
};

/// Clip force and torque magnitudes to the actuator limits (direction preserved).
Wrench saturate(const Wrench& w, const ActuatorLimits& limits);

}  // namespace flyer
