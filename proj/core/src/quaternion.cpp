#include "flyer/quaternion.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flyer {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(n) || n == 0.0) {
    throw std::invalid_argument("UnitQuaternion: zero or non-finite quaternion");
  }
  w_ = w / n;
  x_ = x / n;
  y_ = y / n;
  z_ = z / n;
}

UnitQuaternion::UnitQuaternion(const Quat4& wxyz)
    : UnitQuaternion(wxyz[0], wxyz[1], wxyz[2], wxyz[3]) {}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(angle)) {
    throw std::invalid_argument("from_axis_angle: axis must be nonzero and angle finite");
  }
  const Vec3 u = axis / n;
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), s * u.x(), s * u.y(), s * u.z()};
}

UnitQuaternion UnitQuaternion::from_rotation_vector(const Vec3& rotvec) {
  const double theta = rotvec.norm();
  if (!std::isfinite(theta)) {
    throw std::invalid_argument("from_rotation_vector: non-finite input");
  }
  if (theta < 1e-8) {
    // second-order series keeps the map smooth through zero
    const Vec3 half = 0.5 * rotvec;
    return {1.0 - theta * theta / 8.0, half.x(), half.y(), half.z()};
  }
  return from_axis_angle(rotvec, theta);
}

UnitQuaternion UnitQuaternion::from_rotation_matrix(const Eigen::Matrix3d& rotation) {
  const Eigen::Quaterniond q(rotation);
  return {q.w(), q.x(), q.y(), q.z()};
}

UnitQuaternion UnitQuaternion::conjugate() const {
  UnitQuaternion q = *this;
  q.x_ = -x_;
  q.y_ = -y_;
  q.z_ = -z_;
  return q;
}

UnitQuaternion UnitQuaternion::operator-() const {
  UnitQuaternion q;
  q.w_ = -w_;
  q.x_ = -x_;
  q.y_ = -y_;
  q.z_ = -z_;
  return q;
}

UnitQuaternion UnitQuaternion::canonical() const {
  for (const double c : {w_, x_, y_, z_}) {
    if (c > 0.0) return *this;
    if (c < 0.0) return -*this;
  }
  return *this;
}

double UnitQuaternion::dot(const UnitQuaternion& o) const {
  return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_;
}

Vec3 UnitQuaternion::rotate(const Vec3& v) const {
  const Vec3 u = vec();
  const Vec3 t = 2.0 * u.cross(v);
  return v + w_ * t + u.cross(t);
}

Eigen::Matrix3d UnitQuaternion::rotation_matrix() const {
  return Eigen::Quaterniond(w_, x_, y_, z_).toRotationMatrix();
}

Vec3 UnitQuaternion::rotation_vector() const {
  // shortest arc: flip to w >= 0
  const double sign = w_ < 0.0 ? -1.0 : 1.0;
  const double w = sign * w_;
  const Vec3 u = sign * vec();
  const double s = u.norm();
  if (s < 1e-12) {
    return 2.0 * u;
  }
  const double theta = 2.0 * std::atan2(s, w);
  return (theta / s) * u;
}

double UnitQuaternion::angle() const {
  return 2.0 * std::atan2(vec().norm(), std::abs(w_));
}

Quat4 hamilton(const Quat4& a, const Quat4& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion(hamilton(a.coeffs(), b.coeffs()));
}

UnitQuaternion quat_multiply(const UnitQuaternion& a, const UnitQuaternion& b) {
  return (a * b).canonical();
}

bool same_rotation(const UnitQuaternion& a, const UnitQuaternion& b, double tol) {
  return 1.0 - std::abs(a.dot(b)) <= tol;
}

namespace {
Quat4 pure(const Vec3& v) { return {0.0, v.x(), v.y(), v.z()}; }
}  // namespace

Vec3 quat_derivative_to_omega(const UnitQuaternion& q, const Quat4& q_dot) {
  const Quat4 r = hamilton(q_dot, q.conjugate().coeffs());
  return 2.0 * r.tail<3>();
}

Quat4 omega_to_quat_derivative(const UnitQuaternion& q, const Vec3& omega) {
  return 0.5 * hamilton(pure(omega), q.coeffs());
}

Quat4 quat_second_derivative(const UnitQuaternion& q, const Vec3& omega, const Vec3& omega_dot) {
  return 0.5 * hamilton(pure(omega_dot), q.coeffs()) - 0.25 * omega.squaredNorm() * q.coeffs();
}

UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::out_of_range("slerp: t must lie in [0, 1]");
  }
  Quat4 qa = a.coeffs();
  Quat4 qb = b.coeffs();
  double d = qa.dot(qb);
  if (d < 0.0) {
    qb = -qb;
    d = -d;
  }
  d = std::min(d, 1.0);
  if (d > 1.0 - 1e-12) {
    return UnitQuaternion(qa + t * (qb - qa));
  }
  const double theta = std::acos(d);
  const double s = std::sin(theta);
  return UnitQuaternion((std::sin((1.0 - t) * theta) / s) * qa + (std::sin(t * theta) / s) * qb);
}

}  // namespace flyer
