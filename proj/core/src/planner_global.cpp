#include "flyer/planner_global.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace flyer {

std::string to_string(OrientationMode m) {
  return m == OrientationMode::FaceForward ? "face_forward" : "polynomial";
}

OrientationMode parse_orientation_mode(const std::string& name) {
  if (name == "polynomial") return OrientationMode::Polynomial;
  if (name == "face_forward") return OrientationMode::FaceForward;
  throw std::invalid_argument("unknown orientation mode '" + name + "'");
}

void PlanRequest::validate() const {
  limits.validate();
  if (degree < 5) throw std::invalid_argument("PlanRequest: degree must be >= 5");
  if (max_scp_iters < 0) throw std::invalid_argument("PlanRequest: max_scp_iters must be >= 0");
  if (!(trust_region > 0.0 && trust_region < 1.0)) {
    throw std::invalid_argument("PlanRequest: trust_region must lie in (0, 1)");
  }
  if (limit_subdivisions < 1) throw std::invalid_argument("PlanRequest: limit_subdivisions must be >= 1");
  if (!start.is_finite() || !goal.is_finite()) throw std::invalid_argument("PlanRequest: non-finite state");
  if (up_hint.norm() == 0.0 || !up_hint.allFinite()) {
    throw std::invalid_argument("PlanRequest: up_hint must be a finite nonzero vector");
  }
  box_sequence_for(corridor, start.position, goal.position);
}

PlanInfeasibleError::PlanInfeasibleError(const std::string& violated_class, double duration)
    : PlanningError("global plan infeasible up to total duration " + std::to_string(duration) +
                    " s; first violated constraint class: " + violated_class),
      class_(violated_class) {}

GlobalPlan::GlobalPlan(BezierSpline spline, QuaternionPolynomial orientation, std::vector<std::size_t> boxes,
                       double jerk_cost, SolverStats stats, std::optional<FaceForwardOrientation> face_forward)
    : spline_(std::move(spline)),
      velocity_(spline_.derivative()),
      acceleration_(velocity_.derivative()),
      orientation_(std::move(orientation)),
      boxes_(std::move(boxes)),
      jerk_cost_(jerk_cost),
      stats_(std::move(stats)),
      face_forward_(std::move(face_forward)) {
  for (std::size_t k = 0; k < spline_.size(); ++k) {
    segment_orientations_.push_back(
        orientation_.restricted(spline_.segment_start(k), spline_.segment_start(k + 1)));
  }
}

KinematicState GlobalPlan::sample(double t) const {
  const double T = total_duration();
  const double tc = std::clamp(t, 0.0, T);
  KinematicState k;
  k.state.position = spline_.evaluate(tc);
  k.state.linear_velocity = velocity_.evaluate(tc);
  k.linear_acceleration = acceleration_.evaluate(tc);
  const OrientationSample att = face_forward_ ? face_forward_->sample(tc) : orientation_.sample(tc);
  k.state.orientation = att.orientation;
  k.state.angular_velocity = att.angular_velocity;
  k.angular_acceleration = att.angular_acceleration;
  return k;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinDuration = 0.1;  // s
// Inequalities are tightened by this much so that solver tolerance can never
// push a certified quantity past its true bound.
constexpr double kCertificateMargin = 1e-6;

// Stacked rows bounding the control points of the order-th derivative after
// splitting into `pieces` equal parts; the shared first row of each later piece is dropped.
MatrixXd subdivided_derivative_rows(int degree, double duration, int order, int pieces) {
  const MatrixXd d = derivative_matrix(degree, duration, order);
  const int m = degree - order;
  const int rows_per_piece = m + 1;
  MatrixXd out(pieces * rows_per_piece - (pieces - 1), degree + 1);
  int row = 0;
  for (int j = 0; j < pieces; ++j) {
    const MatrixXd piece =
        (pieces == 1 ? MatrixXd::Identity(m + 1, m + 1)
                     : restriction_matrix(m, double(j) / pieces, double(j + 1) / pieces)) *
        d;
    const int first = j == 0 ? 0 : 1;
    out.middleRows(row, rows_per_piece - first) = piece.bottomRows(rows_per_piece - first);
    row += rows_per_piece - first;
  }
  return out;
}

struct Layout {
  int degree;
  int segments;
  int per_axis() const { return degree + 1; }
  int per_segment() const { return 3 * per_axis(); }
  int size() const { return segments * per_segment(); }
  int index(int k, int axis, int i) const { return k * per_segment() + axis * per_axis() + i; }
};

struct RowBuilder {
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> lo;
  std::vector<double> hi;
  void add(const Eigen::RowVectorXd& r, double l, double h) {
    rows.push_back(r);
    lo.push_back(l);
    hi.push_back(h);
  }
  MatrixXd matrix(int n) const {
    MatrixXd m(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
    return m;
  }
  static VectorXd vec(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
};

QpProblem build(const PlanRequest& req, const std::vector<std::size_t>& boxes,
                const std::vector<double>& durations, unsigned classes) {
  const int d = req.degree;
  const Layout lay{d, static_cast<int>(boxes.size())};
  const int n = lay.size();
  if (durations.size() != boxes.size()) {
    throw std::invalid_argument("build_spline_qp: need one duration per box in the sequence");
  }
  for (const double t : durations) {
    if (!std::isfinite(t) || t <= 0.0) throw std::invalid_argument("build_spline_qp: durations must be > 0");
  }

  QpProblem p;
  p.hessian = MatrixXd::Zero(n, n);
  p.linear_cost = VectorXd::Zero(n);
  for (int k = 0; k < lay.segments; ++k) {
    const MatrixXd q = 2.0 * jerk_energy_matrix(d, durations[k]);
    for (int a = 0; a < 3; ++a) p.hessian.block(lay.index(k, a, 0), lay.index(k, a, 0), d + 1, d + 1) = q;
  }

  RowBuilder eq;
  if (classes & kBoundaryContinuity) {
    const int last = lay.segments - 1;
    const MatrixXd d1_first = derivative_matrix(d, durations.front(), 1);
    const MatrixXd d2_first = derivative_matrix(d, durations.front(), 2);
    const MatrixXd d1_last = derivative_matrix(d, durations.back(), 1);
    const MatrixXd d2_last = derivative_matrix(d, durations.back(), 2);
    for (int a = 0; a < 3; ++a) {
      auto put = [&](int k, const Eigen::RowVectorXd& coeffs, Eigen::RowVectorXd& row) {
        row.segment(lay.index(k, a, 0), d + 1) += coeffs;
      };
      Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
      r[lay.index(0, a, 0)] = 1.0;
      eq.add(r, req.start.position[a], req.start.position[a]);
      r.setZero();
      put(0, d1_first.row(0), r);
      eq.add(r, req.start.linear_velocity[a], req.start.linear_velocity[a]);
      r.setZero();
      put(0, d2_first.row(0), r);
      eq.add(r, 0.0, 0.0);

      r.setZero();
      r[lay.index(last, a, d)] = 1.0;
      eq.add(r, req.goal.position[a], req.goal.position[a]);
      r.setZero();
      put(last, d1_last.row(d1_last.rows() - 1), r);
      eq.add(r, req.goal.linear_velocity[a], req.goal.linear_velocity[a]);
      r.setZero();
      put(last, d2_last.row(d2_last.rows() - 1), r);
      eq.add(r, 0.0, 0.0);

      for (int k = 0; k + 1 < lay.segments; ++k) {
        for (int order = 0; order <= 2; ++order) {
          const MatrixXd dl = derivative_matrix(d, durations[k], order);
          const MatrixXd dr = derivative_matrix(d, durations[k + 1], order);
          r.setZero();
          put(k, dl.row(dl.rows() - 1), r);
          put(k + 1, -dr.row(0), r);
          eq.add(r, 0.0, 0.0);
        }
      }
    }
  }
  p.eq_matrix = eq.matrix(n);
  p.eq_rhs = RowBuilder::vec(eq.lo);

  RowBuilder in;
  if (classes & kContainment) {
    for (int k = 0; k < lay.segments; ++k) {
      const Aabb& box = req.corridor.box(boxes[k]);
      for (int a = 0; a < 3; ++a) {
        // the margin may not exceed half the box width
        const double width = box.max_corner()[a] - box.min_corner()[a];
        const double eps = std::min(kCertificateMargin, 0.25 * width);
        for (int i = 0; i <= d; ++i) {
          Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
          r[lay.index(k, a, i)] = 1.0;
          in.add(r, box.min_corner()[a] + eps, box.max_corner()[a] - eps);
        }
      }
    }
  }
  auto add_limit = [&](int order, double limit) {
    const double bound = limit * (1.0 - kCertificateMargin);
    for (int k = 0; k < lay.segments; ++k) {
      const MatrixXd rows = subdivided_derivative_rows(d, durations[k], order, req.limit_subdivisions);
      for (int a = 0; a < 3; ++a) {
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
          Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
          r.segment(lay.index(k, a, 0), d + 1) = rows.row(i);
          in.add(r, -bound, bound);
        }
      }
    }
  };
  if (classes & kVelocityLimit) add_limit(1, req.limits.max_velocity);
  if (classes & kAccelerationLimit) add_limit(2, req.limits.max_acceleration);
  p.ineq_matrix = in.matrix(n);
  p.ineq_lower = RowBuilder::vec(in.lo);
  p.ineq_upper = RowBuilder::vec(in.hi);
  return p;
}

// Fraction of the limit used by the velocity/acceleration rows, in [0, inf).
double limit_utilization(const PlanRequest& req, const std::vector<double>& durations, const VectorXd& x) {
  const int d = req.degree;
  const Layout lay{d, static_cast<int>(durations.size())};
  double u = 0.0;
  for (int k = 0; k < lay.segments; ++k) {
    const MatrixXd v = subdivided_derivative_rows(d, durations[k], 1, req.limit_subdivisions);
    const MatrixXd acc = subdivided_derivative_rows(d, durations[k], 2, req.limit_subdivisions);
    for (int a = 0; a < 3; ++a) {
      const VectorXd p = x.segment(lay.index(k, a, 0), d + 1);
      u = std::max(u, (v * p).cwiseAbs().maxCoeff() / req.limits.max_velocity);
      u = std::max(u, (acc * p).cwiseAbs().maxCoeff() / req.limits.max_acceleration);
    }
  }
  return u;
}

struct Attempt {
  bool feasible = false;
  bool converged = true;
  QpResult result;
};

Attempt try_solve(const QpProblem& p, const QpSettings& settings, const std::optional<QpIterate>& warm,
                  SolverStats& stats) {
  Attempt a;
  ++stats.qp_solves;
  try {
    a.result = solve_qp(p, settings, warm);
    a.feasible = true;
  } catch (const QpInfeasibleError&) {
    a.feasible = false;
  } catch (const QpNotConvergedError& e) {
    a.feasible = false;
    a.converged = false;
    stats.qp_iterations += e.last_iterate().iterations;
    return a;
  }
  stats.qp_iterations += a.result.iterations;
  return a;
}

// Minimum-norm correction onto A x = b, then exact C0 and endpoint snapping.
std::vector<BezierCurve> to_segments(const PlanRequest& req, const QpProblem& p, VectorXd x,
                                     const std::vector<double>& durations) {
  if (p.eq_matrix.rows() > 0) {
    const VectorXd r = p.eq_matrix * x - p.eq_rhs;
    x -= p.eq_matrix.completeOrthogonalDecomposition().solve(r);
  }
  const int d = req.degree;
  const Layout lay{d, static_cast<int>(durations.size())};
  std::vector<std::vector<Vec3>> pts(lay.segments, std::vector<Vec3>(d + 1));
  for (int k = 0; k < lay.segments; ++k) {
    for (int i = 0; i <= d; ++i) {
      pts[k][i] = Vec3(x[lay.index(k, 0, i)], x[lay.index(k, 1, i)], x[lay.index(k, 2, i)]);
    }
  }
  pts.front().front() = req.start.position;
  pts.back().back() = req.goal.position;
  for (int k = 0; k + 1 < lay.segments; ++k) pts[k + 1].front() = pts[k].back();
  std::vector<BezierCurve> segs;
  for (int k = 0; k < lay.segments; ++k) segs.emplace_back(pts[k], durations[k]);
  return segs;
}

std::vector<double> normalized(std::vector<double> w) {
  const double floor = 0.1 / static_cast<double>(w.size());
  double sum = 0.0;
  for (const double v : w) sum += v;
  if (!(sum > 0.0)) return std::vector<double>(w.size(), 1.0 / static_cast<double>(w.size()));
  for (double& v : w) v = std::max(v / sum, floor);
  sum = 0.0;
  for (const double v : w) sum += v;
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> scaled(const std::vector<double>& w, double total) {
  std::vector<double> out;
  for (const double v : w) out.push_back(v * total);
  return out;
}

double arc_length(const BezierCurve& c) {
  constexpr int kSamples = 32;
  double len = 0.0;
  Vec3 prev = c.evaluate(0.0);
  for (int i = 1; i <= kSamples; ++i) {
    const Vec3 p = c.evaluate(c.duration() * i / kSamples);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

std::string diagnose(const PlanRequest& req, const std::vector<std::size_t>& boxes,
                     const std::vector<double>& durations) {
  static const std::pair<unsigned, const char*> kSteps[] = {
      {kBoundaryContinuity, "boundary/continuity"},
      {kBoundaryContinuity | kContainment, "containment"},
      {kBoundaryContinuity | kContainment | kVelocityLimit, "velocity limit"},
      {kAllConstraints, "acceleration limit"},
  };
  for (const auto& [mask, name] : kSteps) {
    try {
      solve_qp(build(req, boxes, durations, mask), req.qp);
    } catch (const QpInfeasibleError&) {
      return name;
    } catch (const QpNotConvergedError&) {
      return std::string(name) + " (solver did not converge)";
    }
  }
  return "none identified (solver did not converge)";
}

}  // namespace

QpProblem build_spline_qp(const PlanRequest& req, const std::vector<double>& durations, unsigned classes) {
  const auto boxes = box_sequence_for(req.corridor, req.start.position, req.goal.position);
  return build(req, boxes, durations, classes);
}

GlobalPlan plan_global(const PlanRequest& req) {
  const auto clock_start = std::chrono::steady_clock::now();
  req.validate();
  const auto boxes = box_sequence_for(req.corridor, req.start.position, req.goal.position);
  const std::size_t nseg = boxes.size();

  // chain path through the overlap centers
  std::vector<Vec3> waypoints{req.start.position};
  for (std::size_t k = 0; k + 1 < nseg; ++k) {
    waypoints.push_back(req.corridor.box(boxes[k]).intersection(req.corridor.box(boxes[k + 1])).center());
  }
  waypoints.push_back(req.goal.position);
  std::vector<double> lengths;
  double path = 0.0;
  for (std::size_t k = 0; k < nseg; ++k) {
    lengths.push_back((waypoints[k + 1] - waypoints[k]).norm());
    path += lengths.back();
  }
  std::vector<double> weights = normalized(lengths);

  // rest-to-rest quintic peaks: v = 15 L / (8 T), a = 10 L / (sqrt(3) T^2), w = 15 theta / (8 T)
  double t0 = std::max({kMinDuration, 15.0 * path / (8.0 * req.limits.max_velocity),
                        std::sqrt(10.0 * path / (std::sqrt(3.0) * req.limits.max_acceleration))});
  if (req.orientation_mode == OrientationMode::Polynomial) {
    const double theta = (req.goal.orientation * req.start.orientation.inverse()).angle();
    t0 = std::max(t0, 15.0 * theta / (8.0 * req.limits.max_angular_velocity));
  }

  SolverStats stats;
  // Time-optimality criterion: shorten only while the minimum-jerk solution
  // leaves every limit row slack. When no attempted duration is slack (the
  // boundary conditions pin a limit), feasibility alone decides.
  constexpr double kSlack = 1.0 - 1e-4;
  auto slack = [&](const Attempt& a, const std::vector<double>& durs) {
    return limit_utilization(req, durs, a.result.x) < kSlack;
  };
  double total = t0;
  Attempt best;
  QpProblem best_problem;
  std::vector<double> best_durations;
  std::optional<std::tuple<double, Attempt, QpProblem, std::vector<double>>> first_feasible;
  bool found_slack = false;
  for (int k = 0; k <= 12 && !found_slack; ++k) {
    const double trial = t0 * std::pow(1.5, k);
    const auto durs = scaled(weights, trial);
    QpProblem problem = build(req, boxes, durs, kAllConstraints);
    Attempt a = try_solve(problem, req.qp, std::nullopt, stats);
    if (!a.converged) stats.converged = false;
    if (!a.feasible) continue;
    found_slack = slack(a, durs);
    if (found_slack || !first_feasible) first_feasible.emplace(trial, std::move(a), std::move(problem), durs);
  }
  if (!first_feasible) {
    throw PlanInfeasibleError(diagnose(req, boxes, scaled(weights, t0)), t0 * std::pow(1.5, 12));
  }
  std::tie(total, best, best_problem, best_durations) = std::move(*first_feasible);
  stats.accepted_durations.push_back(total);

  auto solution_weights = [&](const Attempt& a, const QpProblem& p, const std::vector<double>& durs) {
    std::vector<double> arc;
    for (const auto& seg : to_segments(req, p, a.result.x, durs)) arc.push_back(arc_length(seg));
    return normalized(arc);
  };
  {
    const auto arc = solution_weights(best, best_problem, best_durations);
    for (std::size_t k = 0; k < nseg; ++k) weights[k] = 0.5 * weights[k] + 0.5 * arc[k];
  }

  double radius = req.trust_region;
  while (stats.scp_iterations < req.max_scp_iters && radius >= 1e-3 && total > kMinDuration) {
    ++stats.scp_iterations;
    const double trial_total = std::max(kMinDuration, total * (1.0 - radius));
    const std::vector<double> durs = scaled(weights, trial_total);
    QpProblem problem = build(req, boxes, durs, kAllConstraints);
    Attempt a = try_solve(problem, req.qp, best.result.iterate(), stats);
    if (!a.converged) stats.converged = false;
    const bool accept = a.feasible && (!found_slack || slack(a, durs));
    if (!accept) {
      radius *= 0.5;
      continue;
    }
    total = trial_total;
    best = std::move(a);
    best_problem = std::move(problem);
    best_durations = durs;
    stats.accepted_durations.push_back(total);
    const auto arc = solution_weights(best, best_problem, best_durations);
    for (std::size_t k = 0; k < nseg; ++k) weights[k] = 0.5 * weights[k] + 0.5 * arc[k];
    weights = normalized(weights);
  }

  stats.final_residual = std::max(
      {best.result.equality_residual, best.result.inequality_violation, best.result.stationarity_residual});
  BezierSpline spline(to_segments(req, best_problem, best.result.x, best_durations));
  double jerk = 0.0;
  for (const auto& seg : spline.segments()) {
    const MatrixXd q = jerk_energy_matrix(seg.degree(), seg.duration());
    for (int a = 0; a < 3; ++a) {
      VectorXd p(seg.degree() + 1);
      for (int i = 0; i <= seg.degree(); ++i) p[i] = seg.control_points()[i][a];
      jerk += p.dot(q * p);
    }
  }
  QuaternionPolynomial att =
      plan_orientation(req.start.orientation, req.start.angular_velocity, Vec3::Zero(), req.goal.orientation,
                       req.goal.angular_velocity, Vec3::Zero(), spline.total_duration());
  std::optional<FaceForwardOrientation> ff;
  if (req.orientation_mode == OrientationMode::FaceForward && path > 0.0) ff.emplace(spline, req.up_hint);
  stats.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return GlobalPlan(std::move(spline), std::move(att), boxes, jerk, std::move(stats), std::move(ff));
}

std::vector<std::string> certify_plan(const GlobalPlan& plan, const PlanRequest& req) {
  std::vector<std::string> out;
  const auto& segs = plan.spline().segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Aabb& box = req.corridor.box(plan.boxes().at(k));
    for (const Vec3& p : segs[k].control_points()) {
      if (!box.contains(p)) {
        out.push_back("segment " + std::to_string(k) + ": control point outside box " +
                      std::to_string(plan.boxes()[k]));
        break;
      }
    }
    const int d = segs[k].degree();
    auto check = [&](int order, double limit, const char* what) {
      const MatrixXd rows = subdivided_derivative_rows(d, segs[k].duration(), order, req.limit_subdivisions);
      for (int a = 0; a < 3; ++a) {
        VectorXd p(d + 1);
        for (int i = 0; i <= d; ++i) p[i] = segs[k].control_points()[i][a];
        if ((rows * p).cwiseAbs().maxCoeff() > limit) {
          out.push_back("segment " + std::to_string(k) + ": " + what + " certificate exceeds limit");
          return;
        }
      }
    };
    check(1, req.limits.max_velocity, "velocity");
    check(2, req.limits.max_acceleration, "acceleration");
  }
  for (int order = 1; order <= 2; ++order) {
    if (plan.spline().junction_residual(order) > 1e-8) {
      out.push_back("junction C" + std::to_string(order) + " residual above 1e-8");
    }
  }
  const double T = plan.total_duration();
  auto near = [](const Vec3& a, const Vec3& b) { return (a - b).cwiseAbs().maxCoeff() <= 1e-9; };
  if (!near(plan.spline().evaluate(0.0), req.start.position) || !near(plan.spline().evaluate(T), req.goal.position)) {
    out.push_back("endpoint position mismatch");
  }
  if (!near(plan.velocity().evaluate(0.0), req.start.linear_velocity) ||
      !near(plan.velocity().evaluate(T), req.goal.linear_velocity)) {
    out.push_back("endpoint velocity mismatch");
  }
  if (!near(plan.acceleration().evaluate(0.0), Vec3::Zero()) || !near(plan.acceleration().evaluate(T), Vec3::Zero())) {
    out.push_back("endpoint acceleration mismatch");
  }
  return out;
}

}  // namespace flyer
