#include <gtest/gtest.h>

#include <cmath>

#include "flyer/planner_global.hpp"

namespace flyer {
namespace {

PlanRequest request(std::vector<Aabb> boxes, const Vec3& start, const Vec3& goal) {
  PlanRequest r{Corridor(std::move(boxes))};
  r.start.position = start;
  r.goal.position = goal;
  return r;
}

PlanRequest single_box(double dx) {
  return request({Aabb(Vec3(-1, -1, -1), Vec3(3, 1, 1))}, Vec3::Zero(), Vec3(dx, 0, 0));
}

PlanRequest two_box() {
  return request({Aabb(Vec3(0, 0, 0), Vec3(2, 1, 1)), Aabb(Vec3(1, 0, 0), Vec3(2, 3, 1))}, Vec3(0.3, 0.5, 0.5),
                 Vec3(1.5, 2.7, 0.5));
}

PlanRequest five_box() {
  return request({Aabb(Vec3(0, 0, 0), Vec3(2, 1, 1)), Aabb(Vec3(1.2, 0, 0), Vec3(2, 3, 1)),
                  Aabb(Vec3(1.2, 2.2, 0), Vec3(4, 3, 1)), Aabb(Vec3(3.2, 2.2, 0), Vec3(4, 3, 3)),
                  Aabb(Vec3(3.2, 2.2, 2.2), Vec3(6, 3, 3))},
                 Vec3(0.4, 0.5, 0.5), Vec3(5.6, 2.6, 2.6));
}

double quintic(double s) { return s * s * s * (10 - 15 * s + 6 * s * s); }

TEST(PlannerGlobal, SplineQpReproducesMinimumJerkQuintic) {
  auto req = single_box(1.0);
  req.limits.max_velocity = 100.0;
  req.limits.max_acceleration = 100.0;
  const double T = 5.0;
  const auto qp = build_spline_qp(req, {T});
  const auto x = solve_qp(qp, req.qp).x;
  const int d = req.degree;
  std::vector<Vec3> pts;
  for (int i = 0; i <= d; ++i) pts.emplace_back(x[i], x[d + 1 + i], x[2 * (d + 1) + i]);
  const BezierCurve curve(pts, T);
  for (int k = 0; k < 50; ++k) {
    const double s = k / 49.0;
    const Vec3 p = curve.evaluate(s * T);
    EXPECT_NEAR(p.x(), quintic(s), 1e-6);
    EXPECT_NEAR(p.y(), 0.0, 1e-6);
    EXPECT_NEAR(p.z(), 0.0, 1e-6);
  }
}

TEST(PlannerGlobal, DurationNearAnalyticLimitTime) {
  struct Case {
    double dx, vmax, amax;
  };
  for (const Case c : {Case{2.0, 0.1, 1.0}, Case{2.0, 1.0, 0.05}, Case{1.0, 0.2, 0.08}}) {
    auto req = single_box(c.dx);
    req.limits.max_velocity = c.vmax;
    req.limits.max_acceleration = c.amax;
    const double t_vel = 15.0 * c.dx / (8.0 * c.vmax);
    const double t_acc = std::sqrt(10.0 * c.dx / (std::sqrt(3.0) * c.amax));
    const double analytic = std::max(t_vel, t_acc);
    const auto plan = plan_global(req);
    EXPECT_NEAR(plan.total_duration(), analytic, 0.05 * analytic) << c.dx << " " << c.vmax << " " << c.amax;
    EXPECT_TRUE(certify_plan(plan, req).empty());
  }
}

TEST(PlannerGlobal, ZeroDisplacementClampsToMinimumDuration) {
  const auto req = single_box(0.0);
  const auto plan = plan_global(req);
  EXPECT_DOUBLE_EQ(plan.total_duration(), 0.1);
  EXPECT_NEAR(plan.jerk_cost(), 0.0, 1e-12);
  for (int k = 0; k <= 10; ++k) EXPECT_NEAR((plan.sample(0.01 * k).state.position).norm(), 0.0, 1e-9);
}

TEST(PlannerGlobal, TwoBoxControlPointsInsideAssignedBoxes) {
  const auto req = two_box();
  const auto plan = plan_global(req);
  ASSERT_EQ(plan.boxes(), (std::vector<std::size_t>{0, 1}));
  for (std::size_t k = 0; k < 2; ++k) {
    for (const Vec3& p : plan.spline().segments()[k].control_points()) {
      EXPECT_TRUE(req.corridor.box(k).contains(p));
    }
  }
}

TEST(PlannerGlobal, CertificatesAndDenseSamples) {
  for (const auto& req : {two_box(), five_box()}) {
    const auto plan = plan_global(req);
    EXPECT_TRUE(certify_plan(plan, req).empty());
    EXPECT_LE(plan.spline().junction_residual(0), 0.0);
    EXPECT_LE(plan.spline().junction_residual(1), 1e-8);
    EXPECT_LE(plan.spline().junction_residual(2), 1e-8);
    const double T = plan.total_duration();
    for (int k = 0; k <= 1000; ++k) {
      const double t = T * k / 1000.0;
      EXPECT_TRUE(contains_point(req.corridor, plan.spline().evaluate(t))) << t;
      const Vec3 v = plan.velocity().evaluate(t);
      const Vec3 a = plan.acceleration().evaluate(t);
      EXPECT_LE(v.cwiseAbs().maxCoeff(), req.limits.max_velocity);
      EXPECT_LE(a.cwiseAbs().maxCoeff(), req.limits.max_acceleration);
    }
    EXPECT_EQ(plan.spline().evaluate(0.0), req.start.position);
    EXPECT_EQ(plan.spline().evaluate(T), req.goal.position);
    EXPECT_EQ(plan.segment_orientations().size(), plan.spline().size());
  }
}

TEST(PlannerGlobal, FiveBoxPlanIsFast) {
  const auto plan = plan_global(five_box());
  EXPECT_LT(plan.stats().wall_time_seconds, 10.0);
  EXPECT_GT(plan.stats().qp_solves, 0);
}

TEST(PlannerGlobal, AcceptedDurationsAreNonIncreasing) {
  for (const auto& req : {single_box(2.0), two_box(), five_box()}) {
    const auto plan = plan_global(req);
    const auto& hist = plan.stats().accepted_durations;
    ASSERT_FALSE(hist.empty());
    for (std::size_t i = 1; i < hist.size(); ++i) EXPECT_LE(hist[i], hist[i - 1]);
  }
}

TEST(PlannerGlobal, TighterLimitsNeverShortenPlan) {
  for (auto req : {single_box(2.0), two_box(), five_box()}) {
    const double loose = plan_global(req).total_duration();
    req.limits.max_velocity *= 0.5;
    req.limits.max_acceleration *= 0.5;
    const double tight = plan_global(req).total_duration();
    EXPECT_GE(tight, loose);
  }
}

TEST(PlannerGlobal, InfeasibleBoundaryVelocityNamesClass) {
  auto req = single_box(1.0);
  req.start.linear_velocity = Vec3(0.6, 0, 0);
  try {
    plan_global(req);
    FAIL() << "expected PlanInfeasibleError";
  } catch (const PlanInfeasibleError& e) {
    EXPECT_EQ(e.violated_class(), "velocity limit");
  }
}

TEST(PlannerGlobal, FaceForwardOrientationFollowsVelocity) {
  auto req = two_box();
  req.orientation_mode = OrientationMode::FaceForward;
  const auto plan = plan_global(req);
  ASSERT_TRUE(plan.face_forward());
  const double T = plan.total_duration();
  for (int k = 1; k < 100; ++k) {
    const auto s = plan.sample(T * k / 100.0);
    const Vec3 v = s.state.linear_velocity;
    if (v.norm() < 1e-3) continue;
    const Vec3 x_axis = s.state.orientation.rotate(Vec3::UnitX());
    EXPECT_GE(x_axis.dot(v.normalized()), 1.0 - 1e-9);
  }
}

TEST(PlannerGlobal, RejectsBadRequests) {
  auto req = single_box(1.0);
  req.degree = 4;
  EXPECT_THROW(plan_global(req), std::invalid_argument);
  req = single_box(1.0);
  req.goal.position = Vec3(10, 0, 0);
  EXPECT_THROW(plan_global(req), OutsideCorridorError);
  req = single_box(1.0);
  EXPECT_THROW(build_spline_qp(req, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(parse_orientation_mode("sideways"), std::invalid_argument);
}

}  // namespace
}  // namespace flyer
