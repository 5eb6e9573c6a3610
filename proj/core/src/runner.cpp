#include "flyer/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace flyer {

namespace {

void put(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  if (!out.empty() && out.back() != '\n') out += ',';
  out += buf;
}

void put_state(std::string& out, const RigidState& s) {
  for (int i = 0; i < 3; ++i) put(out, s.position[i]);
  const Quat4 q = s.orientation.coeffs();
  for (int i = 0; i < 4; ++i) put(out, q[i]);
  for (int i = 0; i < 3; ++i) put(out, s.linear_velocity[i]);
  for (int i = 0; i < 3; ++i) put(out, s.angular_velocity[i]);
}

void add_state_columns(std::vector<std::string>& cols, const std::string& prefix) {
  for (const char* c : {"px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz"}) {
    cols.push_back(prefix + "_" + c);
  }
}

std::string join_csv(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  return out + "\n";
}

nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::vector<std::string> csv_header(std::size_t cargo_bodies) {
  std::vector<std::string> cols{"t"};
  add_state_columns(cols, "robot");
  for (std::size_t i = 0; i < cargo_bodies; ++i) add_state_columns(cols, "bag" + std::to_string(i));
  for (const char* c : {"force_x", "force_y", "force_z", "torque_x", "torque_y", "torque_z"}) cols.push_back(c);
  cols.push_back("margin_robot");
  for (std::size_t i = 0; i < cargo_bodies; ++i) cols.push_back("margin_bag" + std::to_string(i));
  cols.push_back("collide_robot");
  for (std::size_t i = 0; i < cargo_bodies; ++i) cols.push_back("collide_bag" + std::to_string(i));
  for (const char* c : {"cost_tracking", "cost_relvel", "cost_collision", "cost_total"}) cols.push_back(c);
  return cols;
}

RunOutcome run_scenario(const Scenario& scenario, const RunOptions& options) {
  RunOutcome out;
  RunMetrics& m = out.metrics;
  m.scenario = scenario.name;
  m.controller = options.controller.value_or(scenario.controller);
  const std::uint64_t seed = options.seed.value_or(scenario.seed);
  const std::string dir = options.out_dir.value_or(scenario.output_dir);
  const std::string stem = scenario.name + "_" + to_string(m.controller);

  auto write_metrics = [&](const nlohmann::ordered_json& j) {
    if (!options.write_files) return;
    std::filesystem::create_directories(dir);
    m.metrics_path = (std::filesystem::path(dir) / (stem + "_metrics.json")).string();
    std::ofstream f(m.metrics_path);
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write '" + m.metrics_path + "'");
  };

  const PlanRequest request = scenario.plan_request();
  try {
    out.plan.emplace(plan_global(request));
  } catch (const PlanningError& e) {
    m.exit_code = kExitInfeasible;
    m.planner_report = e.what();
    nlohmann::ordered_json j;
    j["scenario"] = m.scenario;
    j["exit_code"] = m.exit_code;
    j["planner_report"] = m.planner_report;
    if (const auto* p = dynamic_cast<const PlanInfeasibleError*>(&e)) j["violated_class"] = p->violated_class();
    write_metrics(j);
    return out;
  }
  const GlobalPlan& plan = *out.plan;
  m.plan_duration = plan.total_duration();
  m.plan_wall_time = plan.stats().wall_time_seconds;

  const Dynamics plant(scenario.sim);
  const SimState initial = plant.neutral_state(scenario.start);
  const Corridor corridor = scenario.corridor();
  MpcConfig cfg = scenario.mpc_config();
  cfg.rng_seed = seed;
  if (options.workers) cfg.workers = *options.workers;

  if (m.controller == ControllerKind::Mpc) {
    const Dynamics model(scenario.rollout_config());
    MpcRun run = run_mpc(plan, plant, model, initial, cfg, corridor, scenario.settle_time);
    out.log = std::move(run.log);
    out.replans = std::move(run.replans);
  } else {
    out.log = track(plan, plant, initial, scenario.gains, scenario.control_dt, scenario.settle_time);
  }

  const std::size_t nc = plant.cargo_body_count();
  std::string csv = join_csv(csv_header(nc));
  m.min_margin = m.min_robot_margin = m.min_cargo_margin = std::numeric_limits<double>::infinity();
  for (const StepRecord& r : out.log.steps) {
    const CollisionReport rep = collision_report(plant, r.state, corridor);
    RolloutSample sample;
    sample.t = r.t;
    sample.position = r.state.robot.position;
    sample.orientation = r.state.robot.orientation;
    sample.robot_velocity = r.state.robot.linear_velocity;
    sample.cargo_velocity = nc ? plant.cargo_velocity(r.state) : r.state.robot.linear_velocity;
    sample.margins = rep.margins;
    const CostBreakdown cost = rollout_cost({sample}, plan, cfg);

    const std::size_t flags = rep.collision_count();
    m.collision_flags += flags;
    m.colliding_rows += flags > 0;
    m.min_margin = std::min(m.min_margin, rep.min_margin());
    m.min_robot_margin = std::min(m.min_robot_margin, rep.margins[0]);
    for (std::size_t i = 1; i < rep.margins.size(); ++i) m.min_cargo_margin = std::min(m.min_cargo_margin, rep.margins[i]);

    std::string row;
    put(row, r.t);
    put_state(row, r.state.robot);
    for (const auto& b : r.state.bag) put_state(row, b);
    for (int i = 0; i < 3; ++i) put(row, r.wrench.force[i]);
    for (int i = 0; i < 3; ++i) put(row, r.wrench.torque[i]);
    for (const double mg : rep.margins) put(row, mg);
    for (const bool c : rep.colliding) put(row, c ? 1.0 : 0.0);
    put(row, cost.tracking);
    put(row, cost.relative_velocity);
    put(row, cost.collision);
    put(row, cost.total);
    csv += row + "\n";
  }
  m.rows = out.log.steps.size();
  m.rms_tracking_error = out.log.rms_tracking_error();
  m.max_tracking_error = out.log.max_tracking_error();
  for (const auto& r : out.replans) {
    m.mpc_mean_step_wall_time += r.wall_time_seconds;
    m.mpc_max_step_wall_time = std::max(m.mpc_max_step_wall_time, r.wall_time_seconds);
  }
  if (!out.replans.empty()) m.mpc_mean_step_wall_time /= static_cast<double>(out.replans.size());
  m.exit_code = m.collision_flags == 0 ? kExitClean : kExitCollision;

  if (options.write_files) {
    std::filesystem::create_directories(dir);
    m.csv_path = (std::filesystem::path(dir) / (stem + ".csv")).string();
    std::ofstream f(m.csv_path, std::ios::binary);
    f << csv;
    if (!f) throw std::runtime_error("cannot write '" + m.csv_path + "'");
  }

  nlohmann::ordered_json j;
  j["scenario"] = m.scenario;
  j["controller"] = to_string(m.controller);
  j["cargo_variant"] = to_string(scenario.sim.cargo.variant);
  j["seed"] = seed;
  j["exit_code"] = m.exit_code;
  j["total_collisions"] = m.collision_flags;
  j["colliding_rows"] = m.colliding_rows;
  j["rows"] = m.rows;
  j["min_margin_m"] = number(m.min_margin);
  j["min_robot_margin_m"] = number(m.min_robot_margin);
  j["min_cargo_margin_m"] = number(m.min_cargo_margin);
  j["rms_tracking_error_m"] = m.rms_tracking_error;
  j["max_tracking_error_m"] = m.max_tracking_error;
  const SolverStats& st = plan.stats();
  j["plan"] = {{"total_duration_s", plan.total_duration()},
               {"jerk_cost", plan.jerk_cost()},
               {"wall_time_s", st.wall_time_seconds},
               {"scp_iterations", st.scp_iterations},
               {"qp_solves", st.qp_solves},
               {"qp_iterations", st.qp_iterations},
               {"final_qp_residual", st.final_residual},
               {"converged", st.converged},
               {"accepted_durations_s", st.accepted_durations},
               {"boxes", plan.boxes()}};
  if (m.controller == ControllerKind::Mpc) {
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    std::size_t fallbacks = 0;
    for (const auto& r : out.replans) {
      fallbacks += r.fallback;
      nlohmann::ordered_json costs = nlohmann::ordered_json::array();
      for (const double c : r.candidate_costs) costs.push_back(number(c));
      steps.push_back({{"t_s", r.t},
                       {"chosen", r.chosen},
                       {"fallback", r.fallback},
                       {"wall_time_s", r.wall_time_seconds},
                       {"chosen_cost", {{"tracking", r.chosen_cost.tracking},
                                        {"relvel", r.chosen_cost.relative_velocity},
                                        {"collision", r.chosen_cost.collision},
                                        {"total", r.chosen_cost.total}}},
                       {"candidate_costs", costs}});
    }
    j["mpc"] = {{"num_samples", cfg.num_samples},
                {"workers", cfg.workers > 0 ? cfg.workers : default_worker_count()},
                {"replans", out.replans.size()},
                {"fallbacks", fallbacks},
                {"mean_step_wall_time_s", m.mpc_mean_step_wall_time},
                {"max_step_wall_time_s", m.mpc_max_step_wall_time},
                {"steps", steps}};
  }
  write_metrics(j);
  return out;
}

std::string plan_samples_csv(const Scenario& scenario, int count) {
  if (count < 2) throw std::invalid_argument("plan_samples_csv: need at least 2 samples");
  const GlobalPlan plan = plan_global(scenario.plan_request());
  std::string csv = "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,ax,ay,az\n";
  for (int k = 0; k < count; ++k) {
    const double t = plan.total_duration() * k / (count - 1);
    const KinematicState s = plan.sample(t);
    std::string row;
    put(row, t);
    put_state(row, s.state);
    for (int i = 0; i < 3; ++i) put(row, s.linear_acceleration[i]);
    csv += row + "\n";
  }
  return csv;
}

}  // namespace flyer
