#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flyer/control.hpp"
#include "flyer/scenario.hpp"

namespace flyer {

/// Process exit codes of a scenario run.
enum ExitCode : int {
  kExitClean = 0,        // zero collision flags
  kExitCollision = 1,    // at least one collision flag
  kExitInfeasible = 2,   // global planning failed
  kExitInvalidInput = 3  // unreadable or invalid scenario, bad options
};

struct RunOptions {
  /// Overrides the scenario's output directory when set.
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<ControllerKind> controller;
  /// Write the CSV and metrics files; off for in-process comparisons.
  bool write_files = true;
};

struct RunMetrics {
  std::string scenario;
  ControllerKind controller = ControllerKind::Pd;
  int exit_code = kExitClean;
  std::string planner_report;  // set when planning failed
  std::size_t collision_flags = 0;
  std::size_t colliding_rows = 0;
  double min_margin = 0.0;
  double min_robot_margin = 0.0;
  double min_cargo_margin = 0.0;
  double rms_tracking_error = 0.0;
  double max_tracking_error = 0.0;
  double plan_duration = 0.0;
  double plan_wall_time = 0.0;
  double mpc_mean_step_wall_time = 0.0;
  double mpc_max_step_wall_time = 0.0;
  std::size_t rows = 0;
  std::string csv_path;
  std::string metrics_path;
};

/// Everything a run produced; `plan` is empty when planning failed.
struct RunOutcome {
  RunMetrics metrics;
  TrackLog log;
  std::vector<ReplanRecord> replans;
  std::optional<GlobalPlan> plan;
};

/// plan_global, then PD tracking or the MPC loop, then artifacts:
/// <out>/<name>_<controller>.csv and <out>/<name>_<controller>_metrics.json.
/// Planning failure is reported through exit_code, not thrown.
RunOutcome run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Column names of the trajectory CSV for a plant with `cargo_bodies` cargo bodies.
std::vector<std::string> csv_header(std::size_t cargo_bodies);

/// Samples `count` >= 2 evenly spaced plan states as CSV:
/// t, p, q (wxyz), v, w, a. Throws PlanInfeasibleError from planning.
std::string plan_samples_csv(const Scenario& scenario, int count);

}  // namespace flyer
