#pragma once

// Independent reference computations used to freeze expected values in tests.
// Nothing here calls into the library's numerical routines.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace flyer::oracle {

inline double choose(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Direct Bernstein-sum evaluation at normalized s.
inline Eigen::Vector3d bernstein_sum(const std::vector<Eigen::Vector3d>& p, double s) {
  const int n = static_cast<int>(p.size()) - 1;
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int i = 0; i <= n; ++i) {
    out += choose(n, i) * std::pow(s, i) * std::pow(1.0 - s, n - i) * p[i];
  }
  return out;
}

/// Composite Simpson rule with `panels` (even) panels.
template <typename F>
double simpson(F&& f, double a, double b, int panels = 2000) {
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

/// Rotation about z by angle, as a matrix built from cos/sin.
inline Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

/// Matrix to (w, x, y, z) with w >= 0 via the trace formula (valid away from 180 deg).
inline Eigen::Vector4d matrix_to_wxyz(const Eigen::Matrix3d& r) {
  const double w = 0.5 * std::sqrt(1.0 + r.trace());
  return {w, (r(2, 1) - r(1, 2)) / (4 * w), (r(0, 2) - r(2, 0)) / (4 * w),
          (r(1, 0) - r(0, 1)) / (4 * w)};
}

inline Eigen::Vector4d random_unit_wxyz(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized();
}

inline Eigen::Vector3d random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

/// Derivatives 0..2 of a Bezier curve with `duration` at s = 0 (end = false) or
/// s = 1, from forward differences of its control points.
inline std::vector<Eigen::Vector3d> bezier_end_derivatives(const std::vector<Eigen::Vector3d>& p, double duration,
                                                           bool end) {
  const int n = static_cast<int>(p.size()) - 1;
  auto at = [&](int i) { return end ? p[n - i] : p[i]; };
  const double sign = end ? -1.0 : 1.0;
  return {at(0), sign * n * (at(1) - at(0)) / duration,
          n * (n - 1.0) * (at(2) - 2.0 * at(1) + at(0)) / (duration * duration)};
}

/// Control points of the piece of a Bezier curve on [s0, s1], by two de Casteljau splits.
inline std::vector<Eigen::Vector3d> bezier_piece(std::vector<Eigen::Vector3d> p, double s0, double s1) {
  auto split_right = [](std::vector<Eigen::Vector3d> q, double s) {
    const std::size_t n = q.size();
    std::vector<Eigen::Vector3d> right(n);
    for (std::size_t r = 0; r < n; ++r) {
      right[n - 1 - r] = q[n - 1 - r];
      for (std::size_t i = 0; i + 1 < n - r; ++i) q[i] = (1.0 - s) * q[i] + s * q[i + 1];
    }
    for (std::size_t r = 0; r < n; ++r) right[r] = q[r];
    return right;
  };
  auto split_left = [](std::vector<Eigen::Vector3d> q, double s) {
    const std::size_t n = q.size();
    std::vector<Eigen::Vector3d> left(n);
    for (std::size_t r = 0; r < n; ++r) {
      left[r] = q[0];
      for (std::size_t i = 0; i + 1 < n - r; ++i) q[i] = (1.0 - s) * q[i] + s * q[i + 1];
    }
    return left;
  };
  if (s1 < 1.0) p = split_left(p, s1);
  if (s0 > 0.0) p = split_right(p, s0 / s1);
  return p;
}

/// Dense QP  min 1/2 x'Hx + g'x  s.t.  A x = b,  C x <= d,  with H positive definite.
struct DenseQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd C;
  Eigen::VectorXd d;
};

/// Random strictly convex QP with a known feasible point, so it always has a solution.
inline DenseQp random_dense_qp(std::mt19937_64& rng, int n, int me, int mi) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto rnd = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    }
    return m;
  };
  DenseQp qp;
  const Eigen::MatrixXd a = rnd(n, n);
  qp.H = a.transpose() * a + 0.1 * Eigen::MatrixXd::Identity(n, n);
  qp.g = rnd(n, 1);
  qp.A = rnd(me, n);
  const Eigen::VectorXd x0 = 0.1 * rnd(n, 1);
  qp.b = qp.A * x0;
  qp.C = rnd(mi, n);
  qp.d = qp.C * x0 + rnd(mi, 1).cwiseAbs() * 0.5;
  return qp;
}

/// Active-set reference by exhaustive enumeration of working sets: for every
/// subset W of inequality rows solve the KKT system with A and C_W as
/// equalities; the unique strictly convex optimum is the subset whose solution
/// is primal feasible with nonnegative inequality multipliers.
inline std::optional<Eigen::VectorXd> enumerate_active_sets(const DenseQp& qp, double tol = 1e-9) {
  const int n = static_cast<int>(qp.g.size());
  const int me = static_cast<int>(qp.A.rows());
  const int mi = static_cast<int>(qp.C.rows());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << mi); ++mask) {
    std::vector<int> w;
    for (int i = 0; i < mi; ++i) {
      if (mask & (std::uint64_t{1} << i)) w.push_back(i);
    }
    const int k = me + static_cast<int>(w.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = qp.H;
    rhs.head(n) = -qp.g;
    for (int r = 0; r < me; ++r) {
      kkt.block(n + r, 0, 1, n) = qp.A.row(r);
      kkt.block(0, n + r, n, 1) = qp.A.row(r).transpose();
      rhs[n + r] = qp.b[r];
    }
    for (std::size_t r = 0; r < w.size(); ++r) {
      const int row = n + me + static_cast<int>(r);
      kkt.block(row, 0, 1, n) = qp.C.row(w[r]);
      kkt.block(0, row, n, 1) = qp.C.row(w[r]).transpose();
      rhs[row] = qp.d[w[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    bool ok = true;
    for (std::size_t r = 0; r < w.size() && ok; ++r) ok = sol[n + me + r] >= -tol;
    if (mi > 0 && ok) ok = ((qp.C * x - qp.d).array() <= tol).all();
    if (ok) return x;
  }
  return std::nullopt;
}

}  // namespace flyer::oracle
