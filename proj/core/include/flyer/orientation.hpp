#pragma once

#include <array>

#include "flyer/bezier.hpp"
#include "flyer/errors.hpp"
#include "flyer/quaternion.hpp"

namespace flyer {

/// Attitude, world-frame angular velocity and angular acceleration at one instant.
struct OrientationSample {
  UnitQuaternion orientation;
  Vec3 angular_velocity = Vec3::Zero();
  Vec3 angular_acceleration = Vec3::Zero();
};

/// Fifth-order polynomial in each quaternion component,
///   q~(t) = sum_k c_k (t / T)^k,   q(t) = q~(t) / |q~(t)|.
///
/// Construction rejects coefficient sets whose raw norm drops below 0.1
/// anywhere on [0, T] (checked at 100 samples) with DegeneratePathError.
class QuaternionPolynomial {
 public:
  static constexpr double kMinRawNorm = 0.1;

  QuaternionPolynomial(const std::array<Quat4, 6>& coefficients, double duration);

  const std::array<Quat4, 6>& coefficients() const { return coeffs_; }
  double duration() const { return duration_; }

  /// d^order q~ / dt^order at wall-clock t (order 0..2); no range check.
  Quat4 raw(double t, int order = 0) const;

  /// Normalized attitude plus analytic rates. Throws std::out_of_range
  /// outside [0, duration].
  OrientationSample sample(double t) const;

  /// Identical motion over [t0, t1], re-expressed on its own time axis.
  QuaternionPolynomial restricted(double t0, double t1) const;

 private:
  std::array<Quat4, 6> coeffs_;
  double duration_;
};

/// Solves the unique quintic per component matching (q, q_dot, q_ddot) at both
/// ends, with the rates derived from (omega, omega_dot) at unit-norm endpoints.
/// q1 is sign-flipped onto q0's hemisphere first.
QuaternionPolynomial plan_orientation(const UnitQuaternion& q0, const Vec3& w0, const Vec3& a0,
                                      const UnitQuaternion& q1, const Vec3& w1, const Vec3& a1,
                                      double duration);

inline OrientationSample sample_orientation(const QuaternionPolynomial& p, double t) {
  return p.sample(t);
}

/// Orientation whose body x-axis follows the velocity of a spline, with roll
/// fixed by an up hint. Where speed drops below kMinSpeed the last valid
/// orientation is held (the first valid one before any motion).
class FaceForwardOrientation {
 public:
  static constexpr double kMinSpeed = 1e-4;  // m/s

  FaceForwardOrientation(BezierSpline trajectory, const Vec3& up_hint);

  double duration() const { return trajectory_.total_duration(); }
  UnitQuaternion at(double t) const;
  /// Rates by central differences of at().
  OrientationSample sample(double t) const;

 private:
  bool frame_at(double t, UnitQuaternion& out) const;

  BezierSpline trajectory_;
  BezierSpline velocity_;
  Vec3 up_;
};

FaceForwardOrientation face_forward_plan(const BezierSpline& trajectory, const Vec3& up_hint);

}  // namespace flyer
