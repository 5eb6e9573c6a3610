#include "flyer/control.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>

#include "flyer/planner_local.hpp"

namespace flyer {

void PdGains::validate() const {
  for (const double g : {kp_pos, kd_pos, kp_att, kd_att}) {
    if (!std::isfinite(g) || g < 0.0) throw std::invalid_argument("PdGains: gains must be finite and >= 0");
  }
}

Wrench pd_control(const RigidState& current, const KinematicState& reference, const PdGains& gains,
                  const BodyParams& params, const ActuatorLimits& limits) {
  const RigidState& ref = reference.state;
  Wrench w;
  w.force = params.mass * reference.linear_acceleration + gains.kp_pos * (ref.position - current.position) +
            gains.kd_pos * (ref.linear_velocity - current.linear_velocity);
  const Vec3 att_error = quat_multiply(ref.orientation, current.orientation.inverse()).rotation_vector();
  w.torque = params.inertia_diagonal.cwiseProduct(reference.angular_acceleration) + gains.kp_att * att_error +
             gains.kd_att * (ref.angular_velocity - current.angular_velocity);
  return saturate(w, limits);
}

BodyParams effective_body(const Dynamics& dyn) {
  BodyParams p = dyn.bodies().front();
  const SimState neutral = dyn.neutral_state(RigidState{});
  for (std::size_t i = 1; i < dyn.bodies().size(); ++i) {
    const BodyParams& b = dyn.bodies()[i];
    const Vec3 d = neutral.bag[i - 1].position;
    p.mass += b.mass;
    // Parallel-axis terms about the robot center, diagonal only.
    p.inertia_diagonal += b.inertia_diagonal + b.mass * (Vec3::Constant(d.squaredNorm()) - d.cwiseProduct(d));
  }
  return p;
}

double TrackLog::max_tracking_error() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.tracking_error);
  return m;
}

double TrackLog::rms_tracking_error() const {
  if (steps.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : steps) sum += s.tracking_error * s.tracking_error;
  return std::sqrt(sum / static_cast<double>(steps.size()));
}

int substeps(const Dynamics& dyn, double control_dt) {
  const double ratio = control_dt / dyn.config().dt;
  const double n = std::round(ratio);
  if (!(n >= 1.0) || std::abs(ratio - n) > 1e-9 * n) {
    throw std::invalid_argument("control_dt must be a positive whole multiple of the simulator dt");
  }
  return static_cast<int>(n);
}

namespace {

SimState hold(const Dynamics& dyn, SimState s, const Wrench& u, int n) {
  for (int i = 0; i < n; ++i) s = dyn.step(s, u);
  return s;
}

// Reference at t whose feedforward is the mean acceleration over the hold
// interval, so a zero-order-held wrench reproduces the reference velocity change.
template <class F>
KinematicState held_reference(const F& ref, double t, double control_dt) {
  KinematicState k = ref(t);
  const KinematicState next = ref(t + control_dt);
  k.linear_acceleration = (next.state.linear_velocity - k.state.linear_velocity) / control_dt;
  k.angular_acceleration = (next.state.angular_velocity - k.state.angular_velocity) / control_dt;
  return k;
}

int interval_count(double span, double control_dt) {
  return std::max(0, static_cast<int>(std::ceil(span / control_dt - 1e-9)));
}

}  // namespace

TrackLog track(const GlobalPlan& plan, const Dynamics& dyn, const SimState& initial, const PdGains& gains,
               double control_dt, double settle_time) {
  gains.validate();
  if (!(settle_time >= 0.0)) throw std::invalid_argument("track: settle_time must be >= 0");
  const int sub = substeps(dyn, control_dt);
  const int intervals = interval_count(plan.total_duration() + settle_time, control_dt);
  const BodyParams body = effective_body(dyn);
  TrackLog log;
  SimState s = initial;
  for (int k = 0; k <= intervals; ++k) {
    const double t = k * control_dt;
    const KinematicState ref = held_reference([&](double x) { return plan.sample(x); }, t, control_dt);
    StepRecord r;
    r.t = t;
    r.state = s;
    r.tracking_error = (ref.state.position - s.robot.position).norm();
    if (k < intervals) r.wrench = pd_control(s.robot, ref, gains, body, dyn.config().limits);
    log.steps.push_back(r);
    if (k < intervals) s = hold(dyn, s, r.wrench, sub);
  }
  return log;
}

void MpcConfig::validate() const {
  if (num_samples < 1) throw std::invalid_argument("MpcConfig: num_samples must be >= 1");
  if (apply_count < 1) throw std::invalid_argument("MpcConfig: apply_count must be >= 1");
  if (!(control_dt > 0.0) || !(horizon > apply_count * control_dt)) {
    throw std::invalid_argument("MpcConfig: need horizon > apply_count * control_dt > 0");
  }
  for (const double v : {sigma_position, sigma_velocity, sigma_orientation, w_track, w_relvel, w_coll,
                         collision_penalty, w_margin}) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("MpcConfig: scales and weights must be >= 0");
  }
  if (workers < 0) throw std::invalid_argument("MpcConfig: workers must be >= 0");
  gains.validate();
}

int default_worker_count() {
  if (const char* env = std::getenv("FLYER_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

CostBreakdown rollout_cost(const std::vector<RolloutSample>& log, const GlobalPlan& nominal,
                           const MpcConfig& cfg) {
  if (log.empty()) throw std::invalid_argument("rollout_cost: empty log");
  CostBreakdown c;
  for (const auto& r : log) {
    const KinematicState ref = nominal.sample(r.t);
    const Vec3 rot = quat_multiply(ref.state.orientation, r.orientation.inverse()).rotation_vector();
    c.tracking += (r.position - ref.state.position).squaredNorm() + rot.squaredNorm();
    c.relative_velocity += (r.cargo_velocity - r.robot_velocity).squaredNorm();
    for (const double m : r.margins) {
      if (m < 0.0) c.collision += cfg.collision_penalty + cfg.w_margin * -m;
    }
  }
  const double n = static_cast<double>(log.size());
  c.tracking /= n;
  c.relative_velocity /= n;
  c.total = cfg.w_track * c.tracking + cfg.w_relvel * c.relative_velocity + cfg.w_coll * c.collision;
  return c;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Lookahead reference for one candidate: a local plan toward the target,
/// then the target extrapolated at its own velocity.
class CandidateReference {
 public:
  CandidateReference(const KinematicState& start, const KinematicState& target, double duration,
                     double min_duration)
      : target_(target), duration_(duration) {
    if (duration >= min_duration) plan_.emplace(plan_local(start, target, duration));
  }

  KinematicState at(double tau) const {
    if (plan_ && tau <= duration_) return plan_->sample(tau);
    KinematicState k = target_;
    k.state.position += std::max(0.0, tau - duration_) * target_.state.linear_velocity;
    k.linear_acceleration = Vec3::Zero();
    k.angular_acceleration = Vec3::Zero();
    k.state.angular_velocity = Vec3::Zero();
    return k;
  }

 private:
  KinematicState target_;
  double duration_;
  std::optional<LocalPlan> plan_;
};

struct StepContext {
  const SimState& s;
  const GlobalPlan& nominal;
  double t_now;
  const MpcConfig& cfg;
  const Corridor& corridor;
  std::uint64_t stream;
  double lookahead;
  int steps;
  const std::optional<CarriedTarget>& carried;
};

RolloutSample sample_of(const Dynamics& dyn, const SimState& s, double t, const Corridor& corridor) {
  RolloutSample r;
  r.t = t;
  r.position = s.robot.position;
  r.orientation = s.robot.orientation;
  r.robot_velocity = s.robot.linear_velocity;
  r.cargo_velocity = dyn.cargo_body_count() ? dyn.cargo_velocity(s) : s.robot.linear_velocity;
  r.margins = collision_report(dyn, s, corridor).margins;
  return r;
}

CarriedTarget perturbed_target(const StepContext& ctx, int candidate) {
  CarriedTarget goal{ctx.nominal.sample(ctx.t_now + ctx.lookahead), ctx.t_now + ctx.lookahead};
  if (candidate == 0) return goal;
  // Odd candidates explore around the carried target when there is one.
  if (ctx.carried && candidate % 2 == 1) goal = *ctx.carried;
  KinematicState& target = goal.target;
  const MpcConfig& cfg = ctx.cfg;
  std::mt19937_64 rng(ctx.stream ^ static_cast<std::uint64_t>(candidate));
  std::normal_distribution<double> n01(0.0, 1.0);
  Vec3 dp, dv, axis;
  for (int i = 0; i < 3; ++i) dp[i] = n01(rng);
  for (int i = 0; i < 3; ++i) dv[i] = n01(rng);
  for (int i = 0; i < 3; ++i) axis[i] = n01(rng);
  const double angle = cfg.sigma_orientation * n01(rng);
  target.state.position += cfg.sigma_position * dp;
  target.state.linear_velocity += cfg.sigma_velocity * dv;
  if (axis.norm() > 0.0) {
    target.state.orientation = UnitQuaternion::from_axis_angle(axis.normalized(), angle) * target.state.orientation;
  }
  return goal;
}

RolloutResult roll_out(const StepContext& ctx, const Dynamics& dyn, int candidate, const CarriedTarget& goal) {
  RolloutResult out;
  out.candidate = candidate;
  out.target = goal;
  try {
    const MpcConfig& cfg = ctx.cfg;
    // Acceleration is not measured: the plan leaves the measured state with the
    // acceleration a PD tracker of the nominal would command, which is what gives
    // receding-horizon replanning its feedback on drift.
    const BodyParams body = effective_body(dyn);
    KinematicState start = ctx.nominal.sample(ctx.t_now);
    const Wrench corrective = pd_control(ctx.s.robot, start, ctx.cfg.gains, body, dyn.config().limits);
    start.state = ctx.s.robot;
    start.linear_acceleration = corrective.force / body.mass;
    start.angular_acceleration = corrective.torque.cwiseQuotient(body.inertia_diagonal);
    const CandidateReference ref(start, goal.target, goal.time - ctx.t_now, cfg.control_dt);
    const int sub = substeps(dyn, cfg.control_dt);
    std::vector<RolloutSample> log;
    SimState s = ctx.s;
    for (int k = 0; k < ctx.steps; ++k) {
      const KinematicState r =
          held_reference([&](double x) { return ref.at(x); }, k * cfg.control_dt, cfg.control_dt);
      const Wrench u = pd_control(s.robot, r, cfg.gains, body, dyn.config().limits);
      out.controls.push_back(u);
      s = hold(dyn, s, u, sub);
      log.push_back(sample_of(dyn, s, ctx.t_now + (k + 1) * cfg.control_dt, ctx.corridor));
    }
    out.terminal = s;
    out.cost = rollout_cost(log, ctx.nominal, cfg);
    out.feasible = std::isfinite(out.cost.total);
    if (!out.feasible) out.error = "non-finite cost";
  } catch (const Error& e) {
    out.feasible = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace

MpcStepResult mpc_step(const SimState& s, const GlobalPlan& nominal, double t_now, const MpcConfig& cfg,
                       const Dynamics& model, const Corridor& corridor, std::uint64_t replan_index,
                       const std::optional<CarriedTarget>& carried) {
  const auto clock_start = std::chrono::steady_clock::now();
  cfg.validate();
  if (!(t_now >= 0.0) || !std::isfinite(t_now)) throw std::invalid_argument("mpc_step: t_now must be >= 0");
  const double lookahead = std::clamp(nominal.total_duration() - t_now, 0.0, cfg.horizon);
  const int steps = static_cast<int>(std::round(cfg.horizon / cfg.control_dt));
  const StepContext ctx{s, nominal, t_now, cfg, corridor,
                        splitmix64(cfg.rng_seed ^ splitmix64(replan_index)), lookahead, steps, carried};

  MpcStepResult out;
  const int count = cfg.num_samples + (carried ? 1 : 0);
  out.candidates.resize(static_cast<std::size_t>(count));
  const int workers = std::min(cfg.workers > 0 ? cfg.workers : default_worker_count(), count);
  auto work = [&](int w) {
    const Dynamics local = model;
    for (int c = w; c < count; c += workers) {
      const CarriedTarget goal =
          c < cfg.num_samples ? perturbed_target(ctx, c) : *carried;
      out.candidates[static_cast<std::size_t>(c)] = roll_out(ctx, local, c, goal);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : out.candidates) {
    if (r.feasible && r.cost.total < best) {
      best = r.cost.total;
      out.chosen = r.candidate;
    }
  }
  if (out.chosen >= 0) {
    const auto& r = out.candidates[static_cast<std::size_t>(out.chosen)];
    if (out.candidates.front().feasible && r.cost.total > out.candidates.front().cost.total) {
      throw std::logic_error("mpc_step: selected candidate costs more than the nominal candidate");
    }
    out.controls.assign(r.controls.begin(), r.controls.begin() + std::min<std::size_t>(cfg.apply_count, r.controls.size()));
  } else {
    out.fallback = true;
    const int sub = substeps(model, cfg.control_dt);
    const BodyParams body = effective_body(model);
    SimState x = s;
    for (int k = 0; k < cfg.apply_count; ++k) {
      const KinematicState r = held_reference([&](double y) { return nominal.sample(y); },
                                              t_now + k * cfg.control_dt, cfg.control_dt);
      const Wrench u = pd_control(x.robot, r, cfg.gains, body, model.config().limits);
      out.controls.push_back(u);
      x = hold(model, x, u, sub);
    }
  }
  out.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return out;
}

MpcRun run_mpc(const GlobalPlan& plan, const Dynamics& plant, const Dynamics& model, const SimState& initial,
               const MpcConfig& cfg, const Corridor& corridor, double settle_time) {
  cfg.validate();
  if (!(settle_time >= 0.0)) throw std::invalid_argument("run_mpc: settle_time must be >= 0");
  const int sub = substeps(plant, cfg.control_dt);
  substeps(model, cfg.control_dt);
  const int intervals = interval_count(plan.total_duration() + settle_time, cfg.control_dt);
  MpcRun run;
  SimState s = initial;
  std::vector<Wrench> pending;
  std::size_t next = 0;
  std::uint64_t replan = 0;
  std::optional<CarriedTarget> carried;
  for (int k = 0; k <= intervals; ++k) {
    const double t = k * cfg.control_dt;
    StepRecord r;
    r.t = t;
    r.state = s;
    r.tracking_error = (plan.sample(t).state.position - s.robot.position).norm();
    if (k < intervals) {
      if (next == pending.size()) {
        MpcStepResult step = mpc_step(s, plan, t, cfg, model, corridor, replan++, carried);
        carried.reset();
        if (cfg.carry_target && step.chosen > 0) carried = step.candidates[static_cast<std::size_t>(step.chosen)].target;
        ReplanRecord rec;
        rec.t = t;
        rec.chosen = step.chosen;
        rec.fallback = step.fallback;
        rec.wall_time_seconds = step.wall_time_seconds;
        if (step.chosen >= 0) rec.chosen_cost = step.candidates[static_cast<std::size_t>(step.chosen)].cost;
        for (const auto& c : step.candidates) {
          rec.candidate_costs.push_back(c.feasible ? c.cost.total : std::numeric_limits<double>::infinity());
        }
        run.replans.push_back(std::move(rec));
        pending = std::move(step.controls);
        next = 0;
      }
      r.wrench = pending[next++];
    }
    run.log.steps.push_back(r);
    if (k < intervals) s = hold(plant, s, r.wrench, sub);
  }
  return run;
}

}  // namespace flyer
