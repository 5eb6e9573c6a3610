#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace flyer {

using Vec3 = Eigen::Vector3d;
/// Raw quaternion 4-vector in (w, x, y, z) order; used for rates and
/// polynomial coefficients that are not unit-norm.
using Quat4 = Eigen::Vector4d;

/// Rotation stored as a unit quaternion in (w, x, y, z) order.
///
/// Every constructor normalizes. The stored sign is preserved so that
/// sampled paths stay sign-continuous; canonical() maps q and -q to the same
/// representative (w >= 0, ties broken on x, then y, then z).
class UnitQuaternion {
 public:
  UnitQuaternion() = default;
  /// Throws std::invalid_argument on a non-finite or zero-norm input.
  UnitQuaternion(double w, double x, double y, double z);
  explicit UnitQuaternion(const Quat4& wxyz);

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);
  /// Exponential map of a rotation vector (axis * angle).
  static UnitQuaternion from_rotation_vector(const Vec3& rotvec);
  static UnitQuaternion from_rotation_matrix(const Eigen::Matrix3d& rotation);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  Quat4 coeffs() const { return {w_, x_, y_, z_}; }
  Vec3 vec() const { return {x_, y_, z_}; }

  UnitQuaternion conjugate() const;
  UnitQuaternion inverse() const { return conjugate(); }
  UnitQuaternion canonical() const;
  UnitQuaternion operator-() const;

  double dot(const UnitQuaternion& other) const;
  Vec3 rotate(const Vec3& v) const;
  Eigen::Matrix3d rotation_matrix() const;
  /// Log map, shortest arc: returned angle lies in [0, pi].
  Vec3 rotation_vector() const;
  /// Rotation angle in [0, pi].
  double angle() const;

  bool operator==(const UnitQuaternion& other) const = default;

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Hamilton product of raw quaternion 4-vectors.
Quat4 hamilton(const Quat4& a, const Quat4& b);

/// Hamilton product, renormalized, sign preserved.
UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b);

/// Hamilton product, renormalized and canonicalized.
UnitQuaternion quat_multiply(const UnitQuaternion& a, const UnitQuaternion& b);

/// True when a and b encode the same rotation within `tol` (sign-agnostic).
bool same_rotation(const UnitQuaternion& a, const UnitQuaternion& b, double tol = 1e-12);

/// World-frame angular velocity from a quaternion rate: omega = 2 vec(q_dot * conj(q)).
Vec3 quat_derivative_to_omega(const UnitQuaternion& q, const Quat4& q_dot);

/// Inverse of quat_derivative_to_omega: q_dot = 0.5 * omega * q.
Quat4 omega_to_quat_derivative(const UnitQuaternion& q, const Vec3& omega);

/// Second derivative of q for world-frame omega and omega_dot:
/// q_ddot = 0.5 * omega_dot * q - 0.25 * |omega|^2 * q.
Quat4 quat_second_derivative(const UnitQuaternion& q, const Vec3& omega, const Vec3& omega_dot);

/// Geodesic interpolation along the shorter arc. Requires t in [0, 1].
UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double t);

}  // namespace flyer
