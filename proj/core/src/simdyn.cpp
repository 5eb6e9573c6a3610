#include "flyer/simdyn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flyer {

std::string to_string(CargoVariant v) {
  switch (v) {
    case CargoVariant::None:
      return "none";
    case CargoVariant::Constraint:
      return "constraint";
    case CargoVariant::Composite:
      return "composite";
    case CargoVariant::Articulated:
      return "articulated";
  }
  return "none";
}

CargoVariant parse_cargo_variant(const std::string& name) {
  if (name == "none") return CargoVariant::None;
  if (name == "constraint") return CargoVariant::Constraint;
  if (name == "composite") return CargoVariant::Composite;
  if (name == "articulated") return CargoVariant::Articulated;
  throw std::invalid_argument("unknown cargo variant '" + name + "'");
}

namespace {

bool nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void AttachmentParams::validate() const {
  if (!nonneg(linear_stiffness) || !nonneg(linear_damping) || !nonneg(angular_stiffness) ||
      !nonneg(angular_damping)) {
    throw std::invalid_argument("AttachmentParams: stiffness and damping must be finite and >= 0");
  }
  if (!grip_point_robot.allFinite() || !grip_point_bag.allFinite()) {
    throw std::invalid_argument("AttachmentParams: non-finite grip point");
  }
  if (std::isnan(breaking_force) || breaking_force <= 0.0) {
    throw std::invalid_argument("AttachmentParams: breaking_force must be > 0");
  }
}

void InternalLinkParams::validate() const {
  if (!nonneg(linear_stiffness) || !nonneg(linear_damping) || !nonneg(angular_stiffness) ||
      !nonneg(angular_damping)) {
    throw std::invalid_argument("InternalLinkParams: stiffness and damping must be finite and >= 0");
  }
}

void CargoModel::validate() const {
  if (variant == CargoVariant::None) return;
  bag.validate();
  attachment.validate();
  if (variant == CargoVariant::Constraint) return;
  handle.validate();
  internal.validate();
  if (handle.mass >= bag.mass) {
    throw std::invalid_argument("CargoModel: handle mass must be below the total bag mass");
  }
  if (attachment.grip_point_bag.norm() < 0.1) {
    throw std::invalid_argument("CargoModel: multi-body bags need |grip_point_bag| >= 0.1 m");
  }
}

CargoModel CargoModel::constraint() {
  CargoModel m;
  m.variant = CargoVariant::Constraint;
  return m;
}

CargoModel CargoModel::composite() {
  CargoModel m;
  m.variant = CargoVariant::Composite;
  return m;
}

CargoModel CargoModel::articulated() {
  CargoModel m;
  m.variant = CargoVariant::Articulated;
  m.handle.mass = 0.3;
  m.handle.inertia_diagonal = Vec3::Constant(3e-3);
  m.internal = {2000.0, 20.0, 5.0, 0.05};
  return m;
}

double CollisionReport::min_margin() const {
  return margins.empty() ? std::numeric_limits<double>::infinity()
                         : *std::min_element(margins.begin(), margins.end());
}

std::size_t CollisionReport::collision_count() const {
  return static_cast<std::size_t>(std::count(colliding.begin(), colliding.end(), true));
}

Dynamics::Dynamics(SimConfig config) : config_(std::move(config)) {
  config_.robot.validate();
  config_.limits.validate();
  config_.cargo.validate();
  if (!std::isfinite(config_.dt) || config_.dt <= 0.0 || config_.dt > kMaxDt) {
    throw std::invalid_argument("Dynamics: dt must lie in (0, 0.05] s");
  }
  bodies_.push_back(config_.robot);

  const CargoModel& cargo = config_.cargo;
  const AttachmentParams& att = cargo.attachment;
  // bag frame is aligned with the robot frame at rest; its origin is the bag center
  const Vec3 bag_center = att.grip_point_robot - att.grip_point_bag;
  auto add_body = [&](const BodyParams& b, const Vec3& center_in_bag) {
    bodies_.push_back(b);
    rest_offset_.push_back(bag_center + center_in_bag);
    rest_orientation_.push_back(UnitQuaternion::identity());
    return bodies_.size() - 1;
  };
  auto attach = [&](std::size_t child, const Vec3& child_center_in_bag) {
    SpringJoint j;
    j.parent = 0;
    j.child = child;
    j.anchor_parent = att.grip_point_robot;
    j.anchor_child = att.grip_point_bag - child_center_in_bag;
    j.linear_stiffness = att.linear_stiffness;
    j.linear_damping = att.linear_damping;
    j.angular_stiffness = att.angular_stiffness;
    j.angular_damping = att.angular_damping;
    j.breaking_force = att.breaking_force;
    joints_.push_back(j);
  };
  auto link = [&](std::size_t a, const Vec3& ca, std::size_t b, const Vec3& cb, const Vec3& point) {
    SpringJoint j;
    j.parent = a;
    j.child = b;
    j.anchor_parent = point - ca;
    j.anchor_child = point - cb;
    j.linear_stiffness = cargo.internal.linear_stiffness;
    j.linear_damping = cargo.internal.linear_damping;
    j.angular_stiffness = cargo.internal.angular_stiffness;
    j.angular_damping = cargo.internal.angular_damping;
    joints_.push_back(j);
  };

  const Vec3 g = att.grip_point_bag;
  const Vec3 u = g.norm() > 0.0 ? Vec3(g.normalized()) : Vec3(Vec3::UnitX());
  const double r = cargo.bag.collision_radius;
  switch (cargo.variant) {
    case CargoVariant::None:
      break;
    case CargoVariant::Constraint: {
      const auto bag = add_body(cargo.bag, Vec3::Zero());
      attach(bag, Vec3::Zero());
      break;
    }
    case CargoVariant::Composite: {
      const Vec3 ch = g - 0.05 * u;
      const Vec3 ca = 0.5 * r * u;
      const Vec3 cb = -0.5 * r * u;
      BodyParams half;
      half.mass = 0.5 * (cargo.bag.mass - cargo.handle.mass);
      half.inertia_diagonal = 0.5 * cargo.bag.inertia_diagonal;
      half.collision_radius = 0.6 * r;
      const auto h = add_body(cargo.handle, ch);
      const auto a = add_body(half, ca);
      const auto b = add_body(half, cb);
      attach(h, ch);
      link(h, ch, a, ca, 0.5 * (ch + ca));
      link(a, ca, b, cb, 0.5 * (ca + cb));
      break;
    }
    case CargoVariant::Articulated: {
      const Vec3 ch = g - 0.05 * u;
      BodyParams body = cargo.bag;
      body.mass = cargo.bag.mass - cargo.handle.mass;
      const auto h = add_body(cargo.handle, ch);
      const auto b = add_body(body, Vec3::Zero());
      attach(h, ch);
      link(h, ch, b, Vec3::Zero(), g - 0.1 * u);
      break;
    }
  }

  const double bound = stable_dt();
  if (config_.dt > bound) {
    throw std::invalid_argument("Dynamics: dt " + std::to_string(config_.dt) +
                                " s exceeds the stability bound " + std::to_string(bound) +
                                " s (0.2*2*pi/omega_n and m_eff/c over all bodies)");
  }
}

double Dynamics::stable_dt() const {
  // Gershgorin-style row sums per body: each joint adds its stiffness and
  // damping over the effective mass seen along the spring, lever arms included.
  const std::size_t n = bodies_.size();
  std::vector<double> w2(n, 0.0);
  std::vector<double> damp(n, 0.0);
  for (const SpringJoint& j : joints_) {
    const BodyParams& p = bodies_[j.parent];
    const BodyParams& c = bodies_[j.child];
    const double jp = p.inertia_diagonal.minCoeff();
    const double jc = c.inertia_diagonal.minCoeff();
    const double inv_m = 1.0 / p.mass + 1.0 / c.mass + j.anchor_parent.squaredNorm() / jp +
                         j.anchor_child.squaredNorm() / jc;
    const double inv_j = 1.0 / jp + 1.0 / jc;
    const double k = std::max(j.linear_stiffness * inv_m, j.angular_stiffness * inv_j);
    const double d = std::max(j.linear_damping * inv_m, j.angular_damping * inv_j);
    for (const std::size_t i : {j.parent, j.child}) {
      w2[i] += k;
      damp[i] += d;
    }
  }
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (w2[i] > 0.0) bound = std::min(bound, 0.2 * 2.0 * std::numbers::pi / std::sqrt(w2[i]));
    if (damp[i] > 0.0) bound = std::min(bound, 1.0 / damp[i]);
  }
  return bound;
}

SimState Dynamics::neutral_state(const RigidState& robot) const {
  SimState s;
  s.robot = robot;
  for (std::size_t i = 0; i < rest_offset_.size(); ++i) {
    const Vec3 arm = robot.orientation.rotate(rest_offset_[i]);
    RigidState b;
    b.position = robot.position + arm;
    b.orientation = quat_multiply(robot.orientation, rest_orientation_[i]);
    b.linear_velocity = robot.linear_velocity + robot.angular_velocity.cross(arm);
    b.angular_velocity = robot.angular_velocity;
    s.bag.push_back(b);
  }
  s.joint_broken.assign(joints_.size(), false);
  return s;
}

namespace {

const RigidState& body_state(const SimState& s, std::size_t i) { return i == 0 ? s.robot : s.bag[i - 1]; }

struct JointKinematics {
  Vec3 arm_parent;
  Vec3 arm_child;
  Vec3 stretch;          // parent anchor minus child anchor
  Vec3 stretch_rate;
  Vec3 angle_error;      // rotation taking the child to its rest attitude
  Vec3 relative_omega;   // parent minus child
};

JointKinematics joint_kinematics(const SpringJoint& j, const SimState& s) {
  const RigidState& p = body_state(s, j.parent);
  const RigidState& c = body_state(s, j.child);
  JointKinematics k;
  k.arm_parent = p.orientation.rotate(j.anchor_parent);
  k.arm_child = c.orientation.rotate(j.anchor_child);
  k.stretch = (p.position + k.arm_parent) - (c.position + k.arm_child);
  k.stretch_rate = (p.linear_velocity + p.angular_velocity.cross(k.arm_parent)) -
                   (c.linear_velocity + c.angular_velocity.cross(k.arm_child));
  const UnitQuaternion target = p.orientation * j.rest_relative;
  k.angle_error = (target * c.orientation.inverse()).rotation_vector();
  k.relative_omega = p.angular_velocity - c.angular_velocity;
  return k;
}

}  // namespace

Vec3 Dynamics::joint_force(const SimState& s, std::size_t j) const {
  const SpringJoint& joint = joints_.at(j);
  if (s.joint_broken.at(j)) return Vec3::Zero();
  const JointKinematics k = joint_kinematics(joint, s);
  return joint.linear_stiffness * k.stretch + joint.linear_damping * k.stretch_rate;
}

SimState Dynamics::step(const SimState& s, const Wrench& u, double dt) const {
  if (!std::isfinite(dt) || dt <= 0.0 || dt > std::min(kMaxDt, config_.dt)) {
    throw std::invalid_argument("Dynamics::step: dt outside (0, configured dt]");
  }
  if (!u.is_finite()) throw std::invalid_argument("Dynamics::step: non-finite wrench");
  if (!s.robot.is_finite()) throw std::invalid_argument("Dynamics::step: non-finite state");
  if (s.bag.size() != cargo_body_count() || s.joint_broken.size() != joints_.size()) {
    throw std::invalid_argument("Dynamics::step: state does not match the cargo model");
  }

  const std::size_t n = bodies_.size();
  std::vector<Vec3> force(n, Vec3::Zero());
  std::vector<Vec3> torque(n, Vec3::Zero());
  const Wrench applied = saturate(u, config_.limits);
  force[0] = applied.force;
  torque[0] = applied.torque;

  SimState next = s;
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    if (s.joint_broken[j]) continue;
    const SpringJoint& joint = joints_[j];
    const JointKinematics k = joint_kinematics(joint, s);
    if (k.angle_error.norm() >= kMaxRelativeAngle) {
      throw SimulationError("Dynamics::step: relative joint angle too close to pi");
    }
    const Vec3 f = joint.linear_stiffness * k.stretch + joint.linear_damping * k.stretch_rate;
    if (f.norm() > joint.breaking_force) {
      next.joint_broken[j] = true;
      continue;
    }
    const Vec3 tau = joint.angular_stiffness * k.angle_error + joint.angular_damping * k.relative_omega;
    force[joint.child] += f;
    force[joint.parent] -= f;
    torque[joint.child] += k.arm_child.cross(f) + tau;
    torque[joint.parent] -= k.arm_parent.cross(f) + tau;
  }

  for (std::size_t i = 0; i < n; ++i) {
    RigidState& b = i == 0 ? next.robot : next.bag[i - 1];
    const BodyParams& params = bodies_[i];
    b.linear_velocity += dt * force[i] / params.mass;
    b.angular_velocity += dt * torque[i].cwiseQuotient(params.inertia_diagonal);
    b.position += dt * b.linear_velocity;
    b.orientation = UnitQuaternion::from_rotation_vector(dt * b.angular_velocity) * b.orientation;
    if (!b.is_finite()) throw SimulationError("Dynamics::step: state became non-finite");
  }
  next.time = s.time + dt;
  next.steps = s.steps + 1;
  return next;
}

double Dynamics::energy(const SimState& s) const {
  double e = 0.0;
  for (std::size_t i = 0; i < bodies_.size(); ++i) {
    const RigidState& b = body_state(s, i);
    e += 0.5 * bodies_[i].mass * b.linear_velocity.squaredNorm();
    e += 0.5 * b.angular_velocity.dot(bodies_[i].inertia_diagonal.cwiseProduct(b.angular_velocity));
  }
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    if (s.joint_broken[j]) continue;
    const JointKinematics k = joint_kinematics(joints_[j], s);
    e += 0.5 * joints_[j].linear_stiffness * k.stretch.squaredNorm();
    e += 0.5 * joints_[j].angular_stiffness * k.angle_error.squaredNorm();
  }
  return e;
}

Vec3 Dynamics::linear_momentum(const SimState& s) const {
  Vec3 p = Vec3::Zero();
  for (std::size_t i = 0; i < bodies_.size(); ++i) p += bodies_[i].mass * body_state(s, i).linear_velocity;
  return p;
}

Vec3 Dynamics::cargo_velocity(const SimState& s) const {
  if (bodies_.size() == 1) return Vec3::Zero();
  Vec3 p = Vec3::Zero();
  double m = 0.0;
  for (std::size_t i = 1; i < bodies_.size(); ++i) {
    p += bodies_[i].mass * body_state(s, i).linear_velocity;
    m += bodies_[i].mass;
  }
  return p / m;
}

CollisionReport collision_report(const Dynamics& dyn, const SimState& s, const Corridor& c) {
  CollisionReport r;
  const auto& bodies = dyn.bodies();
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const double m = safety_margin(c, body_state(s, i).position) - bodies[i].collision_radius;
    r.margins.push_back(m);
    r.colliding.push_back(m < 0.0);
  }
  return r;
}

}  // namespace flyer
