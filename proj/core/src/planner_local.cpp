#include "flyer/planner_local.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flyer {

KinematicState LocalPlan::sample(double t) const {
  const OrientationSample att = orientation.sample(t);
  KinematicState k;
  k.state.position = curve.evaluate(t);
  k.state.linear_velocity = velocity.evaluate(t);
  k.state.orientation = att.orientation;
  k.state.angular_velocity = att.angular_velocity;
  k.linear_acceleration = acceleration.evaluate(t);
  k.angular_acceleration = att.angular_acceleration;
  return k;
}

namespace {

BezierCurve quintic(const KinematicState& start, const KinematicState& end, double T) {
  const Vec3& p0 = start.state.position;
  const Vec3& p5 = end.state.position;
  const Vec3 p1 = p0 + T * start.state.linear_velocity / 5.0;
  const Vec3 p2 = 2.0 * p1 - p0 + T * T * start.linear_acceleration / 20.0;
  const Vec3 p4 = p5 - T * end.state.linear_velocity / 5.0;
  const Vec3 p3 = 2.0 * p4 - p5 + T * T * end.linear_acceleration / 20.0;
  return BezierCurve({p0, p1, p2, p3, p4, p5}, T);
}

double max_control_norm(const BezierCurve& b) {
  double m = 0.0;
  for (const Vec3& p : b.control_points()) m = std::max(m, p.norm());
  return m;
}

}  // namespace

LocalPlan plan_local(const KinematicState& start, const KinematicState& end, double duration) {
  if (!std::isfinite(duration) || duration <= 0.0) {
    throw std::invalid_argument("plan_local: duration must be finite and > 0");
  }
  BezierCurve curve = quintic(start, end, duration);
  BezierCurve velocity = curve.derivative();
  BezierCurve acceleration = velocity.derivative();
  QuaternionPolynomial att =
      plan_orientation(start.state.orientation, start.state.angular_velocity, start.angular_acceleration,
                       end.state.orientation, end.state.angular_velocity, end.angular_acceleration, duration);
  return {std::move(curve), std::move(velocity), std::move(acceleration), std::move(att)};
}

double choose_duration(const KinematicState& start, const KinematicState& end,
                       const ActuatorLimits& limits) {
  limits.validate();
  const double distance = (end.state.position - start.state.position).norm();
  const double t0 = std::max(distance / limits.max_velocity, 0.5);
  for (int k = 0; k <= 12; ++k) {
    const double T = t0 * std::pow(1.5, k);
    const BezierCurve c = quintic(start, end, T);
    const BezierCurve v = c.derivative();
    if (max_control_norm(v) <= limits.max_velocity &&
        max_control_norm(v.derivative()) <= limits.max_acceleration) {
      return T;
    }
  }
  throw PlanningError("choose_duration: no duration on the grid satisfies the limits");
}

}  // namespace flyer
