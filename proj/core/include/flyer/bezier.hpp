#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "flyer/corridor.hpp"
#include "flyer/quaternion.hpp"

namespace flyer {

/// Bezier curve in R^3 over wall-clock time [0, duration].
///
/// Internally parameterized on s = t / duration in [0, 1]; derivative()
/// folds the 1/duration chain-rule factor into the hodograph so every public
/// operation speaks wall-clock time.
class BezierCurve {
 public:
  /// Requires at least two control points and a finite duration > 0.
  BezierCurve(std::vector<Vec3> control_points, double duration);

  const std::vector<Vec3>& control_points() const { return points_; }
  double duration() const { return duration_; }
  int degree() const { return static_cast<int>(points_.size()) - 1; }

  /// de Casteljau evaluation. Throws std::out_of_range outside [0, duration].
  Vec3 evaluate(double t) const;

  /// Hodograph: control points n (P[i+1] - P[i]) / duration. The derivative
  /// of a linear curve is returned as a two-point constant curve.
  BezierCurve derivative() const;

  /// Box around the control points, which contains the whole curve.
  /// Flat axes are inflated by a small epsilon to stay a valid Aabb.
  Aabb bounds() const;

  /// Same curve with new_degree + 1 control points.
  BezierCurve degree_elevate(int new_degree) const;

  /// Control points of the piece over normalized parameters [s0, s1],
  /// reparameterized to [0, 1]; the piece keeps duration (s1 - s0) * duration.
  BezierCurve restricted(double s0, double s1) const;

 private:
  std::vector<Vec3> points_;
  double duration_;
};

inline Vec3 evaluate(const BezierCurve& b, double t) { return b.evaluate(t); }
inline BezierCurve derivative(const BezierCurve& b) { return b.derivative(); }
inline Aabb bounds(const BezierCurve& b) { return b.bounds(); }
inline BezierCurve degree_elevate(const BezierCurve& b, int new_degree) {
  return b.degree_elevate(new_degree);
}

/// Row n of Pascal's triangle, as doubles.
std::vector<double> binomial_row(int n);

/// Per-axis quadratic form Q with integral_0^T |b'''(t)|^2 dt = sum_axis p^T Q p,
/// where p stacks one axis of the degree+1 control points. Requires degree >= 3.
Eigen::MatrixXd jerk_energy_matrix(int degree, double duration);

/// Linear map from the degree+1 control points (one axis) to the control
/// points of the k-th time derivative (degree+1-k rows).
Eigen::MatrixXd derivative_matrix(int degree, double duration, int order);

/// Linear map from degree+1 control points to those of the piece [s0, s1].
Eigen::MatrixXd restriction_matrix(int degree, double s0, double s1);

/// Linear map elevating from `from` to `to` degree.
Eigen::MatrixXd elevation_matrix(int from, int to);

/// Piecewise Bezier trajectory. Position is C0 at junctions exactly unless a
/// looser tolerance is passed (derivative splines use one).
class BezierSpline {
 public:
  explicit BezierSpline(std::vector<BezierCurve> segments, double c0_tolerance = 0.0);

  const std::vector<BezierCurve>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  double total_duration() const { return starts_.back(); }
  /// Start time of segment k; index size() gives the total duration.
  double segment_start(std::size_t k) const { return starts_.at(k); }

  /// Evaluates at global time t; t within 1e-9 s outside [0, T] is clamped.
  Vec3 evaluate(double t) const;
  BezierSpline derivative() const;

  /// Max over junctions of |d^order/dt^order| mismatch.
  double junction_residual(int order) const;

 private:
  std::pair<std::size_t, double> locate(double t) const;

  std::vector<BezierCurve> segments_;
  std::vector<double> starts_;
};

}  // namespace flyer
