#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flyer/bezier.hpp"
#include "flyer/corridor.hpp"
#include "flyer/errors.hpp"
#include "flyer/orientation.hpp"
#include "flyer/qp.hpp"
#include "flyer/types.hpp"

namespace flyer {

enum class OrientationMode { Polynomial, FaceForward };

std::string to_string(OrientationMode m);
/// Accepts "polynomial" and "face_forward".
OrientationMode parse_orientation_mode(const std::string& name);

struct PlanRequest {
  explicit PlanRequest(Corridor c) : corridor(std::move(c)) {}

  RigidState start;
  RigidState goal;
  Corridor corridor;
  ActuatorLimits limits;
  int degree = 7;
  int max_scp_iters = 25;
  double trust_region = 0.2;
  /// Hodographs are split into this many equal pieces before their control
  /// points are bounded; 1 is the plain convex-hull certificate.
  int limit_subdivisions = 4;
  OrientationMode orientation_mode = OrientationMode::Polynomial;
  Vec3 up_hint = Vec3::UnitZ();
  QpSettings qp;

  /// Throws std::invalid_argument on bad settings and OutsideCorridorError
  /// when an endpoint lies outside the corridor.
  void validate() const;
};

struct SolverStats {
  int scp_iterations = 0;
  int qp_solves = 0;
  int qp_iterations = 0;
  double final_residual = 0.0;
  double wall_time_seconds = 0.0;
  /// False when some QP hit its iteration cap; the plan is still the best feasible one.
  bool converged = true;
  /// Total duration after the initial solve and after every accepted update.
  std::vector<double> accepted_durations;
};

class GlobalPlan {
 public:
  GlobalPlan(BezierSpline spline, QuaternionPolynomial orientation, std::vector<std::size_t> boxes,
             double jerk_cost, SolverStats stats, std::optional<FaceForwardOrientation> face_forward);

  const BezierSpline& spline() const { return spline_; }
  const BezierSpline& velocity() const { return velocity_; }
  const BezierSpline& acceleration() const { return acceleration_; }
  const QuaternionPolynomial& orientation() const { return orientation_; }
  /// Orientation polynomial re-expressed per segment, aligned with spline junctions.
  const std::vector<QuaternionPolynomial>& segment_orientations() const { return segment_orientations_; }
  const std::vector<std::size_t>& boxes() const { return boxes_; }
  double total_duration() const { return spline_.total_duration(); }
  double jerk_cost() const { return jerk_cost_; }
  const SolverStats& stats() const { return stats_; }
  bool face_forward() const { return face_forward_.has_value(); }

  /// Reference state at t, clamped to [0, total_duration].
  KinematicState sample(double t) const;

 private:
  BezierSpline spline_;
  BezierSpline velocity_;
  BezierSpline acceleration_;
  QuaternionPolynomial orientation_;
  std::vector<QuaternionPolynomial> segment_orientations_;
  std::vector<std::size_t> boxes_;
  double jerk_cost_;
  SolverStats stats_;
  std::optional<FaceForwardOrientation> face_forward_;
};

/// Planning failed at every attempted duration.
class PlanInfeasibleError : public PlanningError {
 public:
  PlanInfeasibleError(const std::string& violated_class, double duration);
  /// First constraint class whose addition made the QP infeasible:
  /// "boundary/continuity", "containment", "velocity limit" or "acceleration limit".
  const std::string& violated_class() const { return class_; }

 private:
  std::string class_;
};

/// Constraint classes; build_spline_qp includes all of them.
enum ConstraintClass : unsigned {
  kBoundaryContinuity = 1u << 0,
  kContainment = 1u << 1,
  kVelocityLimit = 1u << 2,
  kAccelerationLimit = 1u << 3,
  kAllConstraints = 0xFu,
};

/// Spline QP at fixed segment durations. Variable layout: segment k, axis a,
/// control point i sits at k * 3 (d + 1) + a (d + 1) + i.
QpProblem build_spline_qp(const PlanRequest& req, const std::vector<double>& durations,
                          unsigned classes = kAllConstraints);

/// Time-searched minimum-jerk spline through the corridor. Throws
/// PlanInfeasibleError when no duration up to 1.5^12 times the initial guess
/// admits a solution.
GlobalPlan plan_global(const PlanRequest& req);

/// Violated certificates of a plan: control-point containment, C1/C2 junction
/// residuals, subdivided hodograph limits, endpoint conditions. Empty when valid.
std::vector<std::string> certify_plan(const GlobalPlan& plan, const PlanRequest& req);

}  // namespace flyer
