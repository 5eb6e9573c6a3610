#include <gtest/gtest.h>

#include <random>

#include "flyer/planner_local.hpp"
#include "oracles.hpp"

namespace flyer {
namespace {

KinematicState at_rest(const Vec3& p) {
  KinematicState k;
  k.state.position = p;
  return k;
}

KinematicState random_state(std::mt19937_64& rng) {
  KinematicState k;
  k.state.position = oracle::random_vec(rng, 2.0);
  k.state.linear_velocity = oracle::random_vec(rng, 0.3);
  k.linear_acceleration = oracle::random_vec(rng, 0.1);
  k.state.orientation = UnitQuaternion(oracle::random_unit_wxyz(rng));
  k.state.angular_velocity = oracle::random_vec(rng, 0.2);
  k.angular_acceleration = oracle::random_vec(rng, 0.05);
  return k;
}

TEST(PlannerLocal, StationaryPlanIsConstant) {
  const auto s = at_rest(Vec3(1, 2, 3));
  const auto plan = plan_local(s, s, 2.0);
  for (int k = 0; k <= 10; ++k) {
    const auto x = plan.sample(0.2 * k);
    EXPECT_EQ(x.state.position, s.state.position);
    EXPECT_EQ(x.state.linear_velocity, Vec3::Zero());
    EXPECT_EQ(x.state.orientation, UnitQuaternion::identity());
  }
}

TEST(PlannerLocal, RestToRestIsMinimumJerkQuintic) {
  const double T = 4.0;
  const auto plan = plan_local(at_rest(Vec3::Zero()), at_rest(Vec3(1, 0, 0)), T);
  for (int k = 0; k <= 50; ++k) {
    const double s = k / 50.0;
    const double expected = 10 * s * s * s - 15 * s * s * s * s + 6 * s * s * s * s * s;
    EXPECT_NEAR(plan.sample(s * T).state.position.x(), expected, 1e-14);
  }
}

TEST(PlannerLocal, RandomBoundaryConditions) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    auto a = random_state(rng);
    auto b = random_state(rng);
    // keep attitude endpoints within a quarter turn so the quintic stays regular
    b.state.orientation =
        quat_multiply(UnitQuaternion::from_rotation_vector(oracle::random_vec(rng, 0.8)), a.state.orientation);
    const double T = 3.0;
    const auto plan = plan_local(a, b, T);
    const auto s0 = plan.sample(0.0);
    const auto s1 = plan.sample(T);
    EXPECT_LT((s0.state.position - a.state.position).norm(), 1e-9);
    EXPECT_LT((s1.state.position - b.state.position).norm(), 1e-9);
    EXPECT_LT((s0.state.linear_velocity - a.state.linear_velocity).norm(), 1e-9);
    EXPECT_LT((s1.state.linear_velocity - b.state.linear_velocity).norm(), 1e-9);
    EXPECT_LT((s0.linear_acceleration - a.linear_acceleration).norm(), 1e-9);
    EXPECT_LT((s1.linear_acceleration - b.linear_acceleration).norm(), 1e-9);
    EXPECT_TRUE(same_rotation(s0.state.orientation, a.state.orientation, 1e-6));
    EXPECT_TRUE(same_rotation(s1.state.orientation, b.state.orientation, 1e-6));
    EXPECT_LT((s0.state.angular_velocity - a.state.angular_velocity).norm(), 1e-6);
    EXPECT_LT((s1.state.angular_velocity - b.state.angular_velocity).norm(), 1e-6);
    EXPECT_LT((s0.angular_acceleration - a.angular_acceleration).norm(), 1e-6);
    EXPECT_LT((s1.angular_acceleration - b.angular_acceleration).norm(), 1e-6);
  }
}

TEST(PlannerLocal, Deterministic) {
  std::mt19937_64 rng(52);
  const auto a = random_state(rng);
  auto b = a;
  b.state.position += Vec3(1, 0.5, 0);
  const auto p1 = plan_local(a, b, 2.5);
  const auto p2 = plan_local(a, b, 2.5);
  EXPECT_EQ(p1.curve.control_points(), p2.curve.control_points());
  EXPECT_EQ(p1.orientation.coefficients(), p2.orientation.coefficients());
}

TEST(PlannerLocal, RejectsNonPositiveDuration) {
  EXPECT_THROW(plan_local(at_rest(Vec3::Zero()), at_rest(Vec3::Ones()), 0.0), std::invalid_argument);
}

TEST(ChooseDuration, ZeroDisplacementUsesFloor) {
  EXPECT_DOUBLE_EQ(choose_duration(at_rest(Vec3::Zero()), at_rest(Vec3::Zero()), ActuatorLimits{}), 0.5);
}

TEST(ChooseDuration, RespectsQuinticPeakVelocity) {
  ActuatorLimits limits;
  limits.max_velocity = 0.5;
  limits.max_acceleration = 10.0;
  const double T = choose_duration(at_rest(Vec3::Zero()), at_rest(Vec3(1, 0, 0)), limits);
  EXPECT_GE(T, 15.0 / (8.0 * 0.5));
  // grid point: T0 = 2 s, hodograph peak 5/(2T) <= 0.5 first holds at 2 * 1.5^4
  EXPECT_DOUBLE_EQ(T, 2.0 * std::pow(1.5, 4));
  const auto plan = plan_local(at_rest(Vec3::Zero()), at_rest(Vec3(1, 0, 0)), T);
  for (int k = 0; k <= 200; ++k) EXPECT_LE(plan.sample(T * k / 200.0).state.linear_velocity.norm(), 0.5);
}

TEST(ChooseDuration, TighterAccelerationNeverShortens) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.02, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_state(rng);
    auto b = random_state(rng);
    a.state.linear_velocity *= 0.1;
    b.state.linear_velocity *= 0.1;
    a.linear_acceleration *= 0.01;
    b.linear_acceleration *= 0.01;
    ActuatorLimits loose;
    loose.max_acceleration = u(rng);
    ActuatorLimits tight = loose;
    tight.max_acceleration *= 0.5;
    double t_loose = 0.0;
    double t_tight = 0.0;
    try {
      t_loose = choose_duration(a, b, loose);
    } catch (const PlanningError&) {
      EXPECT_THROW(choose_duration(a, b, tight), PlanningError);
      continue;
    }
    try {
      t_tight = choose_duration(a, b, tight);
    } catch (const PlanningError&) {
      continue;
    }
    EXPECT_GE(t_tight, t_loose);
  }
}

TEST(ChooseDuration, InfeasibleBoundarySpeed) {
  KinematicState a = at_rest(Vec3::Zero());
  a.state.linear_velocity = Vec3(2.0, 0, 0);  // above max_velocity at the boundary itself
  EXPECT_THROW(choose_duration(a, at_rest(Vec3(1, 0, 0)), ActuatorLimits{}), PlanningError);
}

}  // namespace
}  // namespace flyer
