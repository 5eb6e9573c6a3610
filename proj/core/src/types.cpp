#include "flyer/types.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flyer {

bool RigidState::is_finite() const {
  return position.allFinite() && orientation.coeffs().allFinite() && linear_velocity.allFinite() &&
         angular_velocity.allFinite();
}

bool Wrench::is_finite() const { return force.allFinite() && torque.allFinite(); }

void ActuatorLimits::validate() const {
  for (const double v : {max_force, max_torque, max_velocity, max_acceleration, max_angular_velocity}) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument("ActuatorLimits: every limit must be finite and strictly positive");
    }
  }
}

void BodyParams::validate() const {
  if (!std::isfinite(mass) || mass <= 0.0) {
    throw std::invalid_argument("BodyParams: mass must be > 0");
  }
  if (!inertia_diagonal.allFinite() || (inertia_diagonal.array() <= 0.0).any()) {
    throw std::invalid_argument("BodyParams: inertia components must be > 0");
  }
  if (!std::isfinite(collision_radius) || collision_radius <= 0.0) {
    throw std::invalid_argument("BodyParams: collision_radius must be > 0");
  }
}

namespace {
Vec3 clip_norm(const Vec3& v, double max_norm) {
  const double n = v.norm();
  if (n <= max_norm) return v;
  // shave a few ulps so the clipped norm never rounds above the limit
  return v * ((max_norm / n) * (1.0 - 4.0 * std::numeric_limits<double>::epsilon()));
}
}  // namespace

Wrench saturate(const Wrench& w, const ActuatorLimits& limits) {
  return {clip_norm(w.force, limits.max_force), clip_norm(w.torque, limits.max_torque)};
}

}  // namespace flyer
