#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "flyer/qp.hpp"
#include "qp_fixture.hpp"

namespace flyer {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Qp, ProjectionOntoHyperplane) {
  QpProblem p;
  p.hessian = 2.0 * Eigen::MatrixXd::Identity(4, 4);
  p.linear_cost = Eigen::VectorXd::Zero(4);
  p.eq_matrix = Eigen::MatrixXd::Zero(1, 4);
  p.eq_matrix(0, 0) = 1.0;
  p.eq_rhs = Eigen::VectorXd::Ones(1);
  p.ineq_matrix = Eigen::MatrixXd::Zero(0, 4);
  p.ineq_lower = Eigen::VectorXd::Zero(0);
  p.ineq_upper = Eigen::VectorXd::Zero(0);
  const auto x = solve_qp(p, 1e-9, 20000);
  EXPECT_LT((x - Eigen::Vector4d(1, 0, 0, 0)).norm(), 1e-8);
}

TEST(Qp, ActiveBound) {
  QpProblem p;
  p.hessian = Eigen::MatrixXd::Constant(1, 1, 2.0);
  p.linear_cost = Eigen::VectorXd::Constant(1, -4.0);
  p.eq_matrix = Eigen::MatrixXd::Zero(0, 1);
  p.eq_rhs = Eigen::VectorXd::Zero(0);
  p.ineq_matrix = Eigen::MatrixXd::Ones(1, 1);
  p.ineq_lower = Eigen::VectorXd::Zero(1);
  p.ineq_upper = Eigen::VectorXd::Ones(1);
  const auto r = solve_qp(p);
  EXPECT_NEAR(r.x[0], 1.0, 1e-9);
  EXPECT_GT(r.y_ineq[0], 0.0);  // upper bound active
}

TEST(Qp, MatchesActiveSetEnumeration) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dense = oracle::random_dense_qp(rng, 20, 3, 10);
    const auto expected = oracle::enumerate_active_sets(dense);
    ASSERT_TRUE(expected.has_value());
    const auto r = solve_qp(oracle::from_dense(dense));
    EXPECT_LT((r.x - *expected).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
    EXPECT_LE(r.equality_residual, 1e-7);
    EXPECT_LE(r.inequality_violation, 1e-7);
    EXPECT_LE(r.stationarity_residual, 1e-7);
  }
}

TEST(Qp, WarmStartReachesSameSolutionFaster) {
  std::mt19937_64 rng(42);
  const auto dense = oracle::random_dense_qp(rng, 15, 2, 8);
  const auto p = oracle::from_dense(dense);
  QpSettings no_polish;
  no_polish.polish = false;
  const auto cold = solve_qp(p, no_polish);
  const auto warm = solve_qp(p, no_polish, cold.iterate());
  EXPECT_LT((warm.x - cold.x).norm(), 1e-6);
  EXPECT_LE(warm.iterations, cold.iterations);
}

TEST(Qp, DetectsInfeasibility) {
  QpProblem p;
  p.hessian = Eigen::MatrixXd::Identity(2, 2);
  p.linear_cost = Eigen::VectorXd::Zero(2);
  p.eq_matrix = Eigen::MatrixXd::Zero(0, 2);
  p.eq_rhs = Eigen::VectorXd::Zero(0);
  p.ineq_matrix = Eigen::MatrixXd(2, 2);
  p.ineq_matrix << 1, 0, 1, 0;
  p.ineq_lower = Eigen::Vector2d(2.0, -kInf);
  p.ineq_upper = Eigen::Vector2d(kInf, 1.0);
  EXPECT_THROW(solve_qp(p), QpInfeasibleError);
}

TEST(Qp, NonConvergenceCarriesResiduals) {
  std::mt19937_64 rng(43);
  const auto p = oracle::from_dense(oracle::random_dense_qp(rng, 20, 3, 10));
  QpSettings s;
  s.max_iterations = 5;
  s.check_every = 1;
  s.polish = false;
  try {
    solve_qp(p, s);
    FAIL();
  } catch (const QpNotConvergedError& e) {
    const auto& last = e.last_iterate();
    EXPECT_EQ(last.x.size(), 20);
    EXPECT_GT(std::max({last.equality_residual, last.inequality_violation, last.stationarity_residual}),
              1e-7);
  }
}

TEST(Qp, ValidatesInput) {
  QpProblem p;
  p.hessian = Eigen::MatrixXd::Identity(2, 2);
  p.hessian(0, 1) = 0.5;
  p.linear_cost = Eigen::VectorXd::Zero(2);
  p.eq_matrix = Eigen::MatrixXd::Zero(0, 2);
  p.eq_rhs = Eigen::VectorXd::Zero(0);
  p.ineq_matrix = Eigen::MatrixXd::Zero(0, 2);
  p.ineq_lower = Eigen::VectorXd::Zero(0);
  p.ineq_upper = Eigen::VectorXd::Zero(0);
  EXPECT_THROW(p.validate(), std::invalid_argument);  // not symmetric
  p.hessian(1, 0) = 0.5;
  EXPECT_NO_THROW(p.validate());
  p.hessian = -Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(p.validate(), std::invalid_argument);  // indefinite
  p.hessian = Eigen::MatrixXd::Identity(2, 2);
  p.eq_matrix = Eigen::MatrixXd::Zero(1, 3);
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace flyer
