#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flyer/planner_global.hpp"
#include "flyer/simdyn.hpp"
#include "flyer/types.hpp"

namespace flyer {

struct PdGains {
  double kp_pos = 2.0;   // N/m
  double kd_pos = 9.0;   // N*s/m
  double kp_att = 0.3;   // N*m/rad
  double kd_att = 0.45;  // N*m*s/rad

  void validate() const;
};

/// Feedforward plus PD wrench, saturated. Feedforward is params.mass times the
/// reference linear acceleration and params.inertia_diagonal times the
/// reference angular acceleration, componentwise.
Wrench pd_control(const RigidState& current, const KinematicState& reference, const PdGains& gains,
                  const BodyParams& params, const ActuatorLimits& limits);

/// Robot parameters with every cargo body lumped in rigidly at its neutral
/// offset: the mass and diagonal inertia that PD feedforward should push.
BodyParams effective_body(const Dynamics& dyn);

/// One control interval: `state` is the state at time t, `wrench` is the input
/// held over [t, t + control_dt).
struct StepRecord {
  double t = 0.0;
  SimState state;
  Wrench wrench;
  double tracking_error = 0.0;  // |p_ref(t) - p(t)|, m
};

struct TrackLog {
  std::vector<StepRecord> steps;
  double max_tracking_error() const;
  double rms_tracking_error() const;
};

/// Number of simulator steps per control interval; throws std::invalid_argument
/// unless control_dt is a whole multiple of the simulator dt.
int substeps(const Dynamics& dyn, double control_dt);

/// PD tracking of plan references from `initial` until plan end plus `settle_time`.
/// The last record carries the final state with a zero wrench.
TrackLog track(const GlobalPlan& plan, const Dynamics& dyn, const SimState& initial, const PdGains& gains,
               double control_dt, double settle_time = 0.0);

struct MpcConfig {
  int num_samples = 32;
  double horizon = 3.0;     // s
  int apply_count = 5;
  double control_dt = 0.05;  // s
  double sigma_position = 0.1;     // m
  double sigma_velocity = 0.05;    // m/s
  double sigma_orientation = 0.1;  // rad
  double w_track = 1.0;
  double w_relvel = 0.5;
  double w_coll = 1.0;
  double collision_penalty = 1e3;
  double w_margin = 1e2;
  /// run_mpc re-offers the previous winner's target as an extra candidate.
  bool carry_target = true;
  std::uint64_t rng_seed = 0;
  /// 0 selects default_worker_count().
  int workers = 0;
  PdGains gains;

  void validate() const;
};

/// FLYER_WORKERS when set to a positive integer, else hardware concurrency (at least 1).
int default_worker_count();

/// Rollout state after each control interval.
struct RolloutSample {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  UnitQuaternion orientation;
  Vec3 robot_velocity = Vec3::Zero();
  /// Mass-weighted cargo velocity; equal to robot_velocity without cargo.
  Vec3 cargo_velocity = Vec3::Zero();
  std::vector<double> margins;
};

struct CostBreakdown {
  double tracking = 0.0;
  double relative_velocity = 0.0;
  double collision = 0.0;
  double total = 0.0;
};

/// tracking = mean |p - p_nom(t)|^2 + |rotvec(q_nom q^-1)|^2;
/// relative_velocity = mean |v_cargo - v_robot|^2;
/// collision = sum over samples and bodies of penalty [margin < 0] + w_margin max(0, -margin);
/// total = w_track tracking + w_relvel relative_velocity + w_coll collision.
/// Throws std::invalid_argument on an empty log.
CostBreakdown rollout_cost(const std::vector<RolloutSample>& log, const GlobalPlan& nominal,
                           const MpcConfig& cfg);

/// Terminal state of a candidate's local plan and the absolute time it is reached.
struct CarriedTarget {
  KinematicState target;
  double time = 0.0;
};

struct RolloutResult {
  int candidate = 0;
  CarriedTarget target;
  bool feasible = false;
  std::string error;
  std::vector<Wrench> controls;
  SimState terminal;
  CostBreakdown cost;
};

struct MpcStepResult {
  std::vector<Wrench> controls;
  std::vector<RolloutResult> candidates;
  int chosen = -1;
  /// True when every candidate failed and controls come from PD on the nominal plan.
  bool fallback = false;
  double wall_time_seconds = 0.0;
};

/// One receding-horizon step: K local-plan candidates toward perturbed
/// lookahead targets, rolled out in parallel on `model`, first apply_count
/// controls of the cheapest returned. `replan_index` selects the random
/// stream, so a run is reproducible for a fixed seed and any worker count.
/// A `carried` target, normally the previous winner's, is rolled out as one
/// extra candidate with index K; past its time the target is extrapolated.
MpcStepResult mpc_step(const SimState& s, const GlobalPlan& nominal, double t_now, const MpcConfig& cfg,
                       const Dynamics& model, const Corridor& corridor, std::uint64_t replan_index,
                       const std::optional<CarriedTarget>& carried = std::nullopt);

/// Compact per-replan diagnostics kept by run_mpc.
struct ReplanRecord {
  double t = 0.0;
  int chosen = -1;
  bool fallback = false;
  double wall_time_seconds = 0.0;
  CostBreakdown chosen_cost;
  std::vector<double> candidate_costs;  // total per candidate, +inf when infeasible
};

struct MpcRun {
  TrackLog log;
  std::vector<ReplanRecord> replans;
};

/// Receding-horizon loop on `plant`: replans every apply_count intervals
/// with rollouts on `model`, until plan end plus `settle_time`. Log records
/// match track(): one per control interval, the last with a zero wrench.
MpcRun run_mpc(const GlobalPlan& plan, const Dynamics& plant, const Dynamics& model, const SimState& initial,
               const MpcConfig& cfg, const Corridor& corridor, double settle_time = 0.0);

}  // namespace flyer
