#include "flyer/bezier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace flyer {

BezierCurve::BezierCurve(std::vector<Vec3> control_points, double duration)
    : points_(std::move(control_points)), duration_(duration) {
  if (points_.size() < 2) {
    throw std::invalid_argument("BezierCurve: at least two control points required");
  }
  if (!std::isfinite(duration_) || duration_ <= 0.0) {
    throw std::invalid_argument("BezierCurve: duration must be finite and > 0");
  }
  for (const auto& p : points_) {
    if (!p.allFinite()) throw std::invalid_argument("BezierCurve: non-finite control point");
  }
}

Vec3 BezierCurve::evaluate(double t) const {
  if (!(t >= 0.0 && t <= duration_)) {
    throw std::out_of_range("BezierCurve::evaluate: t outside [0, duration]");
  }
  const double s = t / duration_;
  if (s == 1.0) return points_.back();
  // a + s (b - a) keeps constant curves and the s = 0 endpoint exact
  std::vector<Vec3> work = points_;
  for (std::size_t level = work.size() - 1; level > 0; --level) {
    for (std::size_t i = 0; i < level; ++i) {
      work[i] += s * (work[i + 1] - work[i]);
    }
  }
  return work[0];
}

BezierCurve BezierCurve::derivative() const {
  const int n = degree();
  std::vector<Vec3> q;
  q.reserve(points_.size());
  for (int i = 0; i < n; ++i) {
    q.push_back((n / duration_) * (points_[i + 1] - points_[i]));
  }
  if (q.size() == 1) q.push_back(q.front());
  return {std::move(q), duration_};
}

Aabb BezierCurve::bounds() const {
  Vec3 lo = points_.front();
  Vec3 hi = points_.front();
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  for (int a = 0; a < 3; ++a) {
    if (!(hi[a] > lo[a])) {
      const double eps = 1e-9 * std::max(1.0, std::abs(lo[a]));
      lo[a] -= eps;
      hi[a] += eps;
    }
  }
  return {lo, hi};
}

BezierCurve BezierCurve::degree_elevate(int new_degree) const {
  if (new_degree < degree()) {
    throw std::invalid_argument("degree_elevate: new degree below current degree");
  }
  std::vector<Vec3> p = points_;
  while (static_cast<int>(p.size()) - 1 < new_degree) {
    const int n = static_cast<int>(p.size()) - 1;
    std::vector<Vec3> q(p.size() + 1);
    q.front() = p.front();
    q.back() = p.back();
    for (int i = 1; i <= n; ++i) {
      const double a = static_cast<double>(i) / (n + 1);
      q[i] = a * p[i - 1] + (1.0 - a) * p[i];
    }
    p = std::move(q);
  }
  return {std::move(p), duration_};
}

BezierCurve BezierCurve::restricted(double s0, double s1) const {
  if (!(0.0 <= s0 && s0 < s1 && s1 <= 1.0)) {
    throw std::invalid_argument("BezierCurve::restricted: need 0 <= s0 < s1 <= 1");
  }
  const Eigen::MatrixXd m = restriction_matrix(degree(), s0, s1);
  std::vector<Vec3> q(points_.size(), Vec3::Zero());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) q[i] += m(i, j) * points_[j];
  }
  return {std::move(q), (s1 - s0) * duration_};
}

std::vector<double> binomial_row(int n) {
  if (n < 0) throw std::invalid_argument("binomial_row: n must be >= 0");
  std::vector<double> row{1.0};
  for (int k = 1; k <= n; ++k) {
    std::vector<double> next(row.size() + 1, 1.0);
    for (std::size_t i = 1; i < row.size(); ++i) next[i] = row[i - 1] + row[i];
    row = std::move(next);
  }
  return row;
}

Eigen::MatrixXd derivative_matrix(int degree, double duration, int order) {
  if (order < 0 || order > degree) {
    throw std::invalid_argument("derivative_matrix: order must lie in [0, degree]");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(degree + 1, degree + 1);
  for (int k = 0; k < order; ++k) {
    const int n = degree - k;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n + 1);
    for (int i = 0; i < n; ++i) {
      d(i, i) = -n / duration;
      d(i, i + 1) = n / duration;
    }
    m = d * m;
  }
  return m;
}

Eigen::MatrixXd jerk_energy_matrix(int degree, double duration) {
  if (degree < 3) throw std::invalid_argument("jerk_energy_matrix: degree must be >= 3");
  if (!std::isfinite(duration) || duration <= 0.0) {
    throw std::invalid_argument("jerk_energy_matrix: duration must be > 0");
  }
  const int m = degree - 3;
  const auto cm = binomial_row(m);
  const auto c2m = binomial_row(2 * m);
  // Gram matrix of the degree-m Bernstein basis on [0, 1]
  Eigen::MatrixXd gram(m + 1, m + 1);
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= m; ++j) {
      gram(i, j) = cm[i] * cm[j] / ((2 * m + 1) * c2m[i + j]);
    }
  }
  const Eigen::MatrixXd d3 = derivative_matrix(degree, duration, 3);
  Eigen::MatrixXd q = duration * d3.transpose() * gram * d3;
  return 0.5 * (q + q.transpose());
}

namespace {

// de Casteljau split at s: control points of the part over [0, s].
Eigen::VectorXd split_left(const Eigen::VectorXd& p, double s) {
  const Eigen::Index n = p.size() - 1;
  Eigen::VectorXd w = p;
  Eigen::VectorXd out(n + 1);
  out[0] = w[0];
  for (Eigen::Index level = 1; level <= n; ++level) {
    for (Eigen::Index i = 0; i <= n - level; ++i) w[i] = (1.0 - s) * w[i] + s * w[i + 1];
    out[level] = w[0];
  }
  return out;
}

// Part over [s, 1].
Eigen::VectorXd split_right(const Eigen::VectorXd& p, double s) {
  const Eigen::Index n = p.size() - 1;
  Eigen::VectorXd w = p;
  Eigen::VectorXd out(n + 1);
  out[n] = w[n];
  for (Eigen::Index level = 1; level <= n; ++level) {
    for (Eigen::Index i = 0; i <= n - level; ++i) w[i] = (1.0 - s) * w[i] + s * w[i + 1];
    out[n - level] = w[n - level];
  }
  return out;
}

}  // namespace

Eigen::MatrixXd restriction_matrix(int degree, double s0, double s1) {
  if (!(0.0 <= s0 && s0 < s1 && s1 <= 1.0)) {
    throw std::invalid_argument("restriction_matrix: need 0 <= s0 < s1 <= 1");
  }
  Eigen::MatrixXd out(degree + 1, degree + 1);
  const double u = (s1 - s0) / (1.0 - s0);
  for (int j = 0; j <= degree; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(degree + 1, j);
    out.col(j) = split_left(split_right(e, s0), u);
  }
  return out;
}

Eigen::MatrixXd elevation_matrix(int from, int to) {
  if (to < from) throw std::invalid_argument("elevation_matrix: to < from");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(from + 1, from + 1);
  for (int n = from; n < to; ++n) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n + 2, n + 1);
    e(0, 0) = 1.0;
    e(n + 1, n) = 1.0;
    for (int i = 1; i <= n; ++i) {
      const double a = static_cast<double>(i) / (n + 1);
      e(i, i - 1) = a;
      e(i, i) = 1.0 - a;
    }
    m = e * m;
  }
  return m;
}

BezierSpline::BezierSpline(std::vector<BezierCurve> segments, double c0_tolerance)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw std::invalid_argument("BezierSpline: no segments");
  starts_.reserve(segments_.size() + 1);
  starts_.push_back(0.0);
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    starts_.push_back(starts_.back() + segments_[k].duration());
    if (k + 1 < segments_.size()) {
      const double gap = (segments_[k].control_points().back() -
                          segments_[k + 1].control_points().front())
                             .cwiseAbs()
                             .maxCoeff();
      if (gap > c0_tolerance) {
        throw std::invalid_argument("BezierSpline: segments are not C0 at junction " +
                                    std::to_string(k));
      }
    }
  }
}

std::pair<std::size_t, double> BezierSpline::locate(double t) const {
  const double total = total_duration();
  const double slack = 1e-9 * std::max(1.0, total);
  if (!(t >= -slack && t <= total + slack)) {
    throw std::out_of_range("BezierSpline::evaluate: t outside [0, total_duration]");
  }
  t = std::clamp(t, 0.0, total);
  auto it = std::upper_bound(starts_.begin(), starts_.end() - 1, t);
  std::size_t k = static_cast<std::size_t>(std::distance(starts_.begin(), it)) - 1;
  k = std::min(k, segments_.size() - 1);
  const double local = std::clamp(t - starts_[k], 0.0, segments_[k].duration());
  return {k, local};
}

Vec3 BezierSpline::evaluate(double t) const {
  const auto [k, local] = locate(t);
  return segments_[k].evaluate(local);
}

BezierSpline BezierSpline::derivative() const {
  std::vector<BezierCurve> d;
  d.reserve(segments_.size());
  for (const auto& s : segments_) d.push_back(s.derivative());
  return BezierSpline(std::move(d), std::numeric_limits<double>::infinity());
}

double BezierSpline::junction_residual(int order) const {
  std::vector<BezierCurve> curves = segments_;
  for (int k = 0; k < order; ++k) {
    for (auto& c : curves) c = c.derivative();
  }
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < curves.size(); ++k) {
    worst = std::max(worst, (curves[k].control_points().back() -
                             curves[k + 1].control_points().front())
                                .cwiseAbs()
                                .maxCoeff());
  }
  return worst;
}

}  // namespace flyer
