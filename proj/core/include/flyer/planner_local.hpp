#pragma once

#include "flyer/bezier.hpp"
#include "flyer/orientation.hpp"
#include "flyer/types.hpp"

namespace flyer {

/// Degree-5 translation plus quintic attitude joining two full kinematic states.
struct LocalPlan {
  BezierCurve curve;
  BezierCurve velocity;
  BezierCurve acceleration;
  QuaternionPolynomial orientation;

  double duration() const { return curve.duration(); }
  /// Throws std::out_of_range outside [0, duration].
  KinematicState sample(double t) const;
};

/// Closed-form two-point boundary-value plan over `duration` seconds.
/// No corridor or limit checks happen here.
LocalPlan plan_local(const KinematicState& start, const KinematicState& end, double duration);

/// Smallest T = T0 * 1.5^k (k <= 12, T0 = max(distance / max_velocity, 0.5 s))
/// whose hodograph control points respect the velocity and acceleration
/// limits. Throws PlanningError when no grid point qualifies.
double choose_duration(const KinematicState& start, const KinematicState& end,
                       const ActuatorLimits& limits);

}  // namespace flyer
