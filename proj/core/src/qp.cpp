#include "flyer/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace flyer {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityRhoScale = 1e3;
constexpr double kInfeasibilityTol = 1e-6;
constexpr int kAdaptEvery = 50;

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Problem in equilibrated coordinates: x = D xs, y = E ys / c, rows scaled by E.
struct Scaled {
  MatrixXd P;
  VectorXd q;
  MatrixXd A;
  VectorXd l;
  VectorXd u;
  VectorXd D;
  VectorXd E;
  double c = 1.0;
};

double clamp_norm(double v) { return v == 0.0 ? 1.0 : std::clamp(v, 1e-4, 1e4); }

Scaled equilibrate(const MatrixXd& P, const VectorXd& q, const MatrixXd& A, const VectorXd& l,
                   const VectorXd& u, int passes) {
  const Index n = P.rows();
  const Index m = A.rows();
  Scaled s{P, q, A, l, u, VectorXd::Ones(n), VectorXd::Ones(m), 1.0};
  for (int pass = 0; pass < passes; ++pass) {
    VectorXd d(n);
    for (Index j = 0; j < n; ++j) {
      double nrm = s.P.col(j).cwiseAbs().maxCoeff();
      if (m > 0) nrm = std::max(nrm, s.A.col(j).cwiseAbs().maxCoeff());
      d[j] = 1.0 / std::sqrt(clamp_norm(nrm));
    }
    VectorXd e(m);
    for (Index i = 0; i < m; ++i) e[i] = 1.0 / std::sqrt(clamp_norm(s.A.row(i).cwiseAbs().maxCoeff()));
    s.P = d.asDiagonal() * s.P * d.asDiagonal();
    s.A = e.asDiagonal() * s.A * d.asDiagonal();
    s.q = d.cwiseProduct(s.q);
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);

    double mean_col = 0.0;
    for (Index j = 0; j < n; ++j) mean_col += s.P.col(j).cwiseAbs().maxCoeff();
    mean_col /= std::max<Index>(n, 1);
    const double gamma = 1.0 / clamp_norm(std::max(mean_col, inf_norm(s.q)));
    s.P *= gamma;
    s.q *= gamma;
    s.c *= gamma;
  }
  for (Index i = 0; i < m; ++i) {
    if (std::isfinite(s.l[i])) s.l[i] *= s.E[i];
    if (std::isfinite(s.u[i])) s.u[i] *= s.E[i];
  }
  return s;
}

struct Residuals {
  double eq = 0.0;
  double ineq = 0.0;
  double stationarity = 0.0;
};

Residuals residuals(const QpProblem& p, const VectorXd& x, const VectorXd& y_eq,
                    const VectorXd& y_in) {
  Residuals r;
  if (p.eq_matrix.rows() > 0) r.eq = inf_norm(p.eq_matrix * x - p.eq_rhs);
  if (p.ineq_matrix.rows() > 0) {
    const VectorXd cx = p.ineq_matrix * x;
    for (Index i = 0; i < cx.size(); ++i) {
      r.ineq = std::max({r.ineq, p.ineq_lower[i] - cx[i], cx[i] - p.ineq_upper[i]});
    }
  }
  VectorXd g = p.hessian * x + p.linear_cost;
  if (p.eq_matrix.rows() > 0) g += p.eq_matrix.transpose() * y_eq;
  if (p.ineq_matrix.rows() > 0) g += p.ineq_matrix.transpose() * y_in;
  r.stationarity = inf_norm(g);
  return r;
}

VectorXd make_rho(const VectorXd& l, const VectorXd& u, double rho) {
  VectorXd r(l.size());
  for (Index i = 0; i < l.size(); ++i) {
    if (l[i] == u[i]) {
      r[i] = kEqualityRhoScale * rho;
    } else if (!std::isfinite(l[i]) && !std::isfinite(u[i])) {
      r[i] = kRhoMin;
    } else {
      r[i] = rho;
    }
  }
  return r;
}

// Solves the equality-constrained QP on the guessed active set; returns false
// when the guess does not yield a KKT point.
bool polish(const Scaled& s, const VectorXd& z, const VectorXd& y, double tol, VectorXd& xs_out,
            VectorXd& ys_out) {
  const Index n = s.P.rows();
  const Index m = s.A.rows();
  std::vector<Index> rows;
  VectorXd target(m);
  std::vector<int> side(m, 0);  // -1 lower, +1 upper, 2 equality
  for (Index i = 0; i < m; ++i) {
    if (s.l[i] == s.u[i]) {
      side[i] = 2;
      target[i] = s.l[i];
    } else if (std::isfinite(s.l[i]) && z[i] - s.l[i] < -y[i]) {
      side[i] = -1;
      target[i] = s.l[i];
    } else if (std::isfinite(s.u[i]) && s.u[i] - z[i] < y[i]) {
      side[i] = 1;
      target[i] = s.u[i];
    }
    if (side[i] != 0) rows.push_back(i);
  }
  const Index k = static_cast<Index>(rows.size());
  MatrixXd kkt = MatrixXd::Zero(n + k, n + k);
  VectorXd rhs(n + k);
  kkt.topLeftCorner(n, n) = s.P;
  rhs.head(n) = -s.q;
  for (Index r = 0; r < k; ++r) {
    kkt.block(n + r, 0, 1, n) = s.A.row(rows[r]);
    kkt.block(0, n + r, n, 1) = s.A.row(rows[r]).transpose();
    rhs[n + r] = target[rows[r]];
  }
  constexpr double delta = 1e-7;
  MatrixXd reg = kkt;
  reg.topLeftCorner(n, n).diagonal().array() += delta;
  reg.bottomRightCorner(k, k).diagonal().array() -= delta;
  const Eigen::PartialPivLU<MatrixXd> lu(reg);
  VectorXd sol = lu.solve(rhs);
  for (int it = 0; it < 25; ++it) {
    const VectorXd res = rhs - kkt * sol;
    if (inf_norm(res) < 1e-14 * std::max(1.0, inf_norm(rhs))) break;
    sol += lu.solve(res);
  }
  if (!sol.allFinite()) return false;
  xs_out = sol.head(n);
  ys_out = VectorXd::Zero(m);
  for (Index r = 0; r < k; ++r) {
    const Index i = rows[r];
    const double yi = sol[n + r];
    // multiplier sign must match the bound it claims to hold
    if ((side[i] == -1 && yi > tol) || (side[i] == 1 && yi < -tol)) return false;
    ys_out[i] = yi;
  }
  return true;
}

}  // namespace

void QpProblem::validate() const {
  const Index n = linear_cost.size();
  if (n == 0) throw std::invalid_argument("QpProblem: no variables");
  if (hessian.rows() != n || hessian.cols() != n) {
    throw std::invalid_argument("QpProblem: hessian dimension mismatch");
  }
  if (eq_matrix.rows() != eq_rhs.size() || (eq_matrix.rows() > 0 && eq_matrix.cols() != n)) {
    throw std::invalid_argument("QpProblem: equality constraint dimension mismatch");
  }
  if (ineq_matrix.rows() != ineq_lower.size() || ineq_matrix.rows() != ineq_upper.size() ||
      (ineq_matrix.rows() > 0 && ineq_matrix.cols() != n)) {
    throw std::invalid_argument("QpProblem: inequality constraint dimension mismatch");
  }
  if (!hessian.allFinite() || !linear_cost.allFinite() || !eq_matrix.allFinite() ||
      !eq_rhs.allFinite() || !ineq_matrix.allFinite()) {
    throw std::invalid_argument("QpProblem: non-finite data");
  }
  for (Index i = 0; i < ineq_lower.size(); ++i) {
    if (ineq_lower[i] > ineq_upper[i] || std::isnan(ineq_lower[i]) || std::isnan(ineq_upper[i])) {
      throw std::invalid_argument("QpProblem: inequality lower bound above upper bound");
    }
  }
  const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
  if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("QpProblem: hessian is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(hessian, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8 * scale) {
    throw std::invalid_argument("QpProblem: hessian is not positive semidefinite");
  }
}

double QpProblem::objective(const VectorXd& x) const {
  return 0.5 * x.dot(hessian * x) + linear_cost.dot(x);
}

QpNotConvergedError::QpNotConvergedError(const std::string& what, QpResult last)
    : Error(what), last_(std::move(last)) {}

QpResult solve_qp(const QpProblem& problem, const QpSettings& settings,
                  const std::optional<QpIterate>& warm_start) {
  problem.validate();
  const Index n = problem.num_variables();
  const Index meq = problem.eq_matrix.rows();
  const Index mineq = problem.ineq_matrix.rows();
  const Index m = meq + mineq;
  const double tol = settings.tolerance;

  MatrixXd a(m, n);
  VectorXd l(m);
  VectorXd u(m);
  if (meq > 0) {
    a.topRows(meq) = problem.eq_matrix;
    l.head(meq) = problem.eq_rhs;
    u.head(meq) = problem.eq_rhs;
  }
  if (mineq > 0) {
    a.bottomRows(mineq) = problem.ineq_matrix;
    l.tail(mineq) = problem.ineq_lower;
    u.tail(mineq) = problem.ineq_upper;
  }

  const Scaled s = equilibrate(problem.hessian, problem.linear_cost, a, l, u, settings.scaling_passes);

  VectorXd x = VectorXd::Zero(n);
  VectorXd y = VectorXd::Zero(m);
  if (warm_start && warm_start->x.size() == n) {
    x = warm_start->x.cwiseQuotient(s.D);
    if (warm_start->y_eq.size() == meq && warm_start->y_ineq.size() == mineq) {
      VectorXd yw(m);
      yw << warm_start->y_eq, warm_start->y_ineq;
      y = s.c * yw.cwiseQuotient(s.E);
    }
  }
  VectorXd z = (s.A * x).cwiseMax(s.l).cwiseMin(s.u);

  double rho_base = settings.rho;
  VectorXd rho = make_rho(s.l, s.u, rho_base);
  auto factor = [&] {
    MatrixXd k = s.P;
    k.diagonal().array() += settings.sigma;
    k.noalias() += s.A.transpose() * rho.asDiagonal() * s.A;
    return Eigen::LLT<MatrixXd>(k);
  };
  Eigen::LLT<MatrixXd> llt = factor();
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("solve_qp: KKT factorization failed");
  }

  const double alpha = settings.relaxation;
  int iterations = 0;
  int infeasible_hits = 0;
  bool converged = false;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    iterations = it;
    const VectorXd rhs = settings.sigma * x - s.q + s.A.transpose() * (rho.cwiseProduct(z) - y);
    const VectorXd xt = llt.solve(rhs);
    const VectorXd zt = s.A * xt;
    const VectorXd x_next = alpha * xt + (1.0 - alpha) * x;
    const VectorXd z_relaxed = alpha * zt + (1.0 - alpha) * z;
    const VectorXd z_next =
        (z_relaxed + y.cwiseQuotient(rho)).cwiseMax(s.l).cwiseMin(s.u);
    const VectorXd y_next = y + rho.cwiseProduct(z_relaxed - z_next);
    const VectorXd dy = y_next - y;
    x = x_next;
    z = z_next;
    y = y_next;

    if (it % settings.check_every != 0 && it != settings.max_iterations) continue;

    const VectorXd ax = s.A * x;
    const VectorXd px = s.P * x;
    const VectorXd aty = s.A.transpose() * y;
    const double prim = m > 0 ? inf_norm((ax - z).cwiseQuotient(s.E)) : 0.0;
    const double dual = inf_norm((px + s.q + aty).cwiseQuotient(s.D)) / s.c;
    if (prim <= tol && dual <= tol) {
      converged = true;
      break;
    }

    // primal infeasibility certificate on the dual step direction
    if (m > 0) {
      const double dy_norm = inf_norm(s.E.cwiseProduct(dy));
      bool certificate = false;
      if (dy_norm > 1e-12) {
        const double at_dy = inf_norm((s.A.transpose() * dy).cwiseQuotient(s.D));
        double support = 0.0;
        bool finite_support = true;
        for (Index i = 0; i < m && finite_support; ++i) {
          if (dy[i] > 0.0) {
            if (!std::isfinite(s.u[i])) finite_support = false;
            else support += s.u[i] * dy[i];
          } else if (dy[i] < 0.0) {
            if (!std::isfinite(s.l[i])) finite_support = false;
            else support += s.l[i] * dy[i];
          }
        }
        certificate = finite_support && at_dy <= kInfeasibilityTol * dy_norm &&
                      support < -kInfeasibilityTol * dy_norm;
      }
      infeasible_hits = certificate ? infeasible_hits + 1 : 0;
      if (infeasible_hits >= 3) {
        throw QpInfeasibleError("solve_qp: problem is primal infeasible");
      }
    }

    if (settings.adaptive_rho && m > 0 && it % kAdaptEvery == 0) {
      const double prim_rel =
          inf_norm(ax - z) / std::max({inf_norm(ax), inf_norm(z), 1e-10});
      const double dual_rel = inf_norm(px + s.q + aty) /
                              std::max({inf_norm(px), inf_norm(aty), inf_norm(s.q), 1e-10});
      const double rho_new =
          std::clamp(rho_base * std::sqrt(prim_rel / std::max(dual_rel, 1e-30)), kRhoMin, kRhoMax);
      if (rho_new > 5.0 * rho_base || rho_new < 0.2 * rho_base) {
        rho_base = rho_new;
        rho = make_rho(s.l, s.u, rho_base);
        llt = factor();
      }
    }
  }

  QpResult result;
  result.iterations = iterations;
  auto unscale = [&](const VectorXd& xs, const VectorXd& ys) {
    result.x = s.D.cwiseProduct(xs);
    const VectorXd yu = s.E.cwiseProduct(ys) / s.c;
    result.y_eq = yu.head(meq);
    result.y_ineq = yu.tail(mineq);
  };
  unscale(x, y);
  Residuals r = residuals(problem, result.x, result.y_eq, result.y_ineq);

  if (settings.polish && m > 0) {
    VectorXd xp;
    VectorXd yp;
    if (polish(s, z, y, tol * s.c, xp, yp)) {
      const VectorXd x_admm = result.x;
      const VectorXd yeq_admm = result.y_eq;
      const VectorXd yin_admm = result.y_ineq;
      unscale(xp, yp);
      const Residuals rp = residuals(problem, result.x, result.y_eq, result.y_ineq);
      if (rp.eq <= tol && rp.ineq <= tol && rp.stationarity <= tol) {
        r = rp;
        result.polished = true;
      } else {
        result.x = x_admm;
        result.y_eq = yeq_admm;
        result.y_ineq = yin_admm;
      }
    }
  }

  result.equality_residual = r.eq;
  result.inequality_violation = r.ineq;
  result.stationarity_residual = r.stationarity;
  result.objective = problem.objective(result.x);

  if (r.eq > tol || r.ineq > tol || r.stationarity > tol) {
    throw QpNotConvergedError(converged ? "solve_qp: residuals above tolerance after unscaling"
                                        : "solve_qp: iteration limit reached before convergence",
                              result);
  }
  return result;
}

Eigen::VectorXd solve_qp(const QpProblem& problem, double tolerance, int max_iterations) {
  QpSettings settings;
  settings.tolerance = tolerance;
  settings.max_iterations = max_iterations;
  return solve_qp(problem, settings).x;
}

}  // namespace flyer
