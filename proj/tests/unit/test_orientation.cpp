#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "flyer/orientation.hpp"
#include "oracles.hpp"

namespace flyer {
namespace {

constexpr double kPi = std::numbers::pi;

struct Boundary {
  UnitQuaternion q0, q1;
  Vec3 w0, a0, w1, a1;
  double duration;
};

Boundary random_boundary(std::mt19937_64& rng) {
  // keep the endpoints within ~90 degrees so the raw norm stays well away from zero
  const UnitQuaternion q0(oracle::random_unit_wxyz(rng));
  const UnitQuaternion q1 =
      quat_multiply(UnitQuaternion::from_rotation_vector(oracle::random_vec(rng, 0.9)), q0);
  return {q0,
          q1,
          oracle::random_vec(rng, 0.2),
          oracle::random_vec(rng, 0.1),
          oracle::random_vec(rng, 0.2),
          oracle::random_vec(rng, 0.1),
          4.0};
}

QuaternionPolynomial plan(const Boundary& b) {
  return plan_orientation(b.q0, b.w0, b.a0, b.q1, b.w1, b.a1, b.duration);
}

Vec3 fd_omega(const QuaternionPolynomial& p, double t, double h) {
  const UnitQuaternion qp = p.sample(t + h).orientation;
  const UnitQuaternion qm = p.sample(t - h).orientation;
  return (qp * qm.inverse()).rotation_vector() / (t + h - (t - h));
}

TEST(Orientation, StationaryPlanIsConstant) {
  const auto id = UnitQuaternion::identity();
  const auto p = plan_orientation(id, Vec3::Zero(), Vec3::Zero(), id, Vec3::Zero(), Vec3::Zero(), 3.0);
  for (int k = 0; k <= 30; ++k) {
    const auto s = p.sample(0.1 * k);
    EXPECT_EQ(s.orientation, id);
    EXPECT_EQ(s.angular_velocity, Vec3::Zero());
    EXPECT_EQ(s.angular_acceleration, Vec3::Zero());
  }
}

TEST(Orientation, SingleAxisMidpointNearGeodesic) {
  const double duration = 5.0;
  const auto q1 = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2);
  const auto p = plan_orientation(UnitQuaternion::identity(), Vec3::Zero(), Vec3::Zero(), q1,
                                  Vec3::Zero(), Vec3::Zero(), duration);
  const auto mid = p.sample(duration / 2).orientation;
  // slerp with minimum-jerk time scaling, s(1/2) = 1/2
  const Eigen::Vector4d expected = oracle::matrix_to_wxyz(oracle::rot_z(kPi / 4));
  EXPECT_LT((mid.canonical().coeffs() - expected).norm(), 1e-3);
  // and off-midpoint the motion stays on the z axis
  for (int k = 0; k <= 20; ++k) {
    const auto q = p.sample(duration * k / 20.0).orientation;
    EXPECT_NEAR(q.x(), 0.0, 1e-15);
    EXPECT_NEAR(q.y(), 0.0, 1e-15);
  }
}

TEST(Orientation, BoundaryOmegaMatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const Boundary b = random_boundary(rng);
    const auto p = plan(b);
    const double h = 1e-5;
    // one-sided second-order stencils at the ends
    auto q = [&](double t) { return p.sample(t).orientation; };
    auto rel = [&](double t0, double t1) { return (q(t1) * q(t0).inverse()).rotation_vector(); };
    const Vec3 w_start = (4.0 * rel(0.0, h) - rel(0.0, 2 * h)) / (2 * h);
    const double T = b.duration;
    const Vec3 w_end = (4.0 * rel(T - h, T) - rel(T - 2 * h, T)) / (2 * h);
    EXPECT_LT((w_start - b.w0).norm(), 1e-4);
    EXPECT_LT((w_end - b.w1).norm(), 1e-4);
  }
}

TEST(Orientation, BoundaryConditionsReproduced) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const Boundary b = random_boundary(rng);
    const auto p = plan(b);
    const auto s0 = p.sample(0.0);
    const auto s1 = p.sample(b.duration);
    EXPECT_TRUE(same_rotation(s0.orientation, b.q0, 1e-9));
    EXPECT_TRUE(same_rotation(s1.orientation, b.q1, 1e-9));
    EXPECT_LT((s0.angular_velocity - b.w0).norm(), 1e-9);
    EXPECT_LT((s1.angular_velocity - b.w1).norm(), 1e-9);
    EXPECT_LT((s0.angular_acceleration - b.a0).norm(), 1e-9);
    EXPECT_LT((s1.angular_acceleration - b.a1).norm(), 1e-9);
  }
}

TEST(Orientation, SampledRatesMatchFiniteDifferences) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const Boundary b = random_boundary(rng);
    const auto p = plan(b);
    const double h = 1e-5;
    for (int k = 1; k < 20; ++k) {
      const double t = b.duration * k / 20.0;
      EXPECT_LT((fd_omega(p, t, h) - p.sample(t).angular_velocity).norm(), 1e-4);
      const Vec3 fd_alpha =
          (p.sample(t + h).angular_velocity - p.sample(t - h).angular_velocity) / (2 * h);
      EXPECT_LT((fd_alpha - p.sample(t).angular_acceleration).norm(), 1e-4);
    }
  }
}

TEST(OrientationProperty, UnitNormAndSignContinuity) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const Boundary b = random_boundary(rng);
    const auto p = plan(b);
    auto prev = p.sample(0.0).orientation;
    for (double t = 0.01; t <= b.duration; t += 0.01) {
      const auto q = p.sample(t).orientation;
      EXPECT_NEAR(q.coeffs().norm(), 1.0, 1e-12);
      EXPECT_GT(prev.dot(q), 0.0);
      prev = q;
    }
  }
}

TEST(Orientation, ShortestArcFlip) {
  const auto q1 = UnitQuaternion::from_axis_angle(Vec3::UnitX(), 0.5);
  const auto a = plan_orientation(UnitQuaternion::identity(), Vec3::Zero(), Vec3::Zero(), q1,
                                  Vec3::Zero(), Vec3::Zero(), 2.0);
  const auto b = plan_orientation(UnitQuaternion::identity(), Vec3::Zero(), Vec3::Zero(), -q1,
                                  Vec3::Zero(), Vec3::Zero(), 2.0);
  for (int k = 0; k <= 10; ++k) {
    EXPECT_TRUE(same_rotation(a.sample(0.2 * k).orientation, b.sample(0.2 * k).orientation, 1e-15));
  }
}

TEST(Orientation, Errors) {
  const auto id = UnitQuaternion::identity();
  EXPECT_THROW(plan_orientation(id, Vec3::Zero(), Vec3::Zero(), id, Vec3::Zero(), Vec3::Zero(), 0.0),
               std::invalid_argument);
  const auto p = plan_orientation(id, Vec3::Zero(), Vec3::Zero(), id, Vec3::Zero(), Vec3::Zero(), 1.0);
  EXPECT_THROW(p.sample(1.5), std::out_of_range);
  // a raw polynomial passing through zero
  std::array<Quat4, 6> c{};
  c[0] = Quat4(1, 0, 0, 0);
  c[1] = Quat4(-2, 0, 0, 0);
  for (int k = 2; k < 6; ++k) c[k] = Quat4::Zero();
  EXPECT_THROW(QuaternionPolynomial(c, 1.0), DegeneratePathError);
  // a fast full spin: the radial -|w|^2/4 term of q_ddot pulls the raw curve through the origin
  EXPECT_THROW(plan_orientation(id, Vec3(0, 0, 11), Vec3::Zero(), id, Vec3(0, 0, 11), Vec3::Zero(), 1.0),
               DegeneratePathError);
}

TEST(Orientation, RestrictedMatchesOriginal) {
  std::mt19937_64 rng(35);
  const Boundary b = random_boundary(rng);
  const auto p = plan(b);
  const auto r = p.restricted(1.0, 2.5);
  EXPECT_DOUBLE_EQ(r.duration(), 1.5);
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.15 * k;
    const auto s = r.sample(t);
    const auto o = p.sample(1.0 + t);
    EXPECT_LT((s.orientation.coeffs() - o.orientation.coeffs()).norm(), 1e-12);
    EXPECT_LT((s.angular_velocity - o.angular_velocity).norm(), 1e-10);
    EXPECT_LT((s.angular_acceleration - o.angular_acceleration).norm(), 1e-9);
  }
}

BezierSpline line_spline(const Vec3& direction) {
  return BezierSpline({BezierCurve({Vec3::Zero(), direction / 3, 2 * direction / 3, direction}, 2.0)});
}

TEST(FaceForward, AlongX) {
  const auto ff = face_forward_plan(line_spline(Vec3::UnitX()), Vec3::UnitZ());
  for (int k = 0; k <= 10; ++k) {
    EXPECT_TRUE(same_rotation(ff.at(0.2 * k), UnitQuaternion::identity(), 1e-12));
    EXPECT_LT(ff.sample(0.2 * k).angular_velocity.norm(), 1e-9);
  }
}

TEST(FaceForward, AlongY) {
  const auto ff = face_forward_plan(line_spline(Vec3::UnitY()), Vec3::UnitZ());
  const auto yaw = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2);
  for (int k = 0; k <= 10; ++k) EXPECT_TRUE(same_rotation(ff.at(0.2 * k), yaw, 1e-12));
}

TEST(FaceForward, ArcAlignment) {
  // quarter-circle-like cubic in the xy plane
  const BezierSpline arc({BezierCurve({Vec3(1, 0, 0), Vec3(1, 0.55, 0), Vec3(0.55, 1, 0), Vec3(0, 1, 0)}, 3.0)});
  const auto ff = face_forward_plan(arc, Vec3::UnitZ());
  const BezierSpline vel = arc.derivative();
  for (int k = 0; k <= 100; ++k) {
    const double t = 3.0 * k / 100.0;
    const Vec3 body_x = ff.at(t).rotate(Vec3::UnitX());
    EXPECT_GE(body_x.dot(vel.evaluate(t).normalized()), 1.0 - 1e-9);
    EXPECT_NEAR(ff.at(t).rotate(Vec3::UnitZ()).z(), 1.0, 1e-12);
  }
}

TEST(FaceForward, HoldsOrientationAtRestEndpointsAndRejectsStaticPath) {
  // rest-to-rest quintic along +y: velocity vanishes at both ends
  std::vector<Vec3> pts(6, Vec3::Zero());
  for (int i = 3; i < 6; ++i) pts[i] = Vec3(0, 1, 0);
  const auto ff = face_forward_plan(BezierSpline({BezierCurve(pts, 2.0)}), Vec3::UnitZ());
  const auto yaw = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), kPi / 2);
  EXPECT_TRUE(same_rotation(ff.at(0.0), yaw, 1e-12));
  EXPECT_TRUE(same_rotation(ff.at(2.0), yaw, 1e-12));

  const BezierSpline still({BezierCurve(std::vector<Vec3>(4, Vec3::Ones()), 1.0)});
  EXPECT_THROW(face_forward_plan(still, Vec3::UnitZ()), DegeneratePathError);
}

}  // namespace
}  // namespace flyer
