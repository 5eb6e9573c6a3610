#pragma once

#include <Eigen/Core>
#include <optional>

#include "flyer/errors.hpp"

namespace flyer {

/// Dense convex QP
///
///   minimize    1/2 x' H x + g' x
///   subject to  A x = b
///               lower <= C x <= upper     (entries may be +-infinity)
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear_cost;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_lower;
  Eigen::VectorXd ineq_upper;

  Eigen::Index num_variables() const { return linear_cost.size(); }
  /// Throws std::invalid_argument on inconsistent dimensions, a non-symmetric
  /// Hessian, an eigenvalue below -1e-8, or lower > upper.
  void validate() const;
  double objective(const Eigen::VectorXd& x) const;
};

struct QpSettings {
  double tolerance = 1e-7;
  int max_iterations = 20000;
  double rho = 0.1;
  double sigma = 1e-6;
  double relaxation = 1.6;
  int scaling_passes = 10;
  int check_every = 10;
  bool adaptive_rho = true;
  bool polish = true;
};

/// Primal and dual iterate, reusable as a warm start.
struct QpIterate {
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_ineq;
};

struct QpResult {
  Eigen::VectorXd x;
  /// Multipliers; for inequality rows, negative means the lower bound is
  /// active and positive means the upper bound is.
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_ineq;
  int iterations = 0;
  double equality_residual = 0.0;
  double inequality_violation = 0.0;
  double stationarity_residual = 0.0;
  double objective = 0.0;
  bool polished = false;

  QpIterate iterate() const { return {x, y_eq, y_ineq}; }
};

class QpInfeasibleError : public Error {
 public:
  using Error::Error;
};

class QpNotConvergedError : public Error {
 public:
  QpNotConvergedError(const std::string& what, QpResult last);
  const QpResult& last_iterate() const { return last_; }

 private:
  QpResult last_;
};

/// Operator-splitting (ADMM) solver with over-relaxation, Ruiz equilibration,
/// adaptive penalty, primal infeasibility certificates and an active-set
/// polishing step. Single use per problem; not thread-safe.
QpResult solve_qp(const QpProblem& problem, const QpSettings& settings = {},
                  const std::optional<QpIterate>& warm_start = std::nullopt);

/// Convenience form returning only the primal solution.
Eigen::VectorXd solve_qp(const QpProblem& problem, double tolerance, int max_iterations);

}  // namespace flyer
