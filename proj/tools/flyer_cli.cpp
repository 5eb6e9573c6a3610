#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "flyer/runner.hpp"
#include "flyer/scenario.hpp"

namespace {

using flyer::kExitInfeasible;
using flyer::kExitInvalidInput;

int cmd_validate(const std::string& path) {
  const auto violations = flyer::validate_scenario(path);
  for (const auto& v : violations) std::cout << v << "\n";
  if (violations.empty()) std::cout << "ok\n";
  return violations.empty() ? 0 : kExitInvalidInput;
}

int cmd_plan(const std::string& path, int samples) {
  const flyer::Scenario s = flyer::load_scenario(path);
  try {
    std::cout << flyer::plan_samples_csv(s, samples);
  } catch (const flyer::PlanningError& e) {
    std::cerr << "planning failed: " << e.what() << "\n";
    return kExitInfeasible;
  }
  return 0;
}

int cmd_run(const std::string& path, const flyer::RunOptions& opts) {
  const flyer::Scenario s = flyer::load_scenario(path);
  const auto out = flyer::run_scenario(s, opts);
  const auto& m = out.metrics;
  if (m.exit_code == kExitInfeasible) {
    std::cerr << "planning failed: " << m.planner_report << "\n";
    return m.exit_code;
  }
  std::cout << "scenario " << m.scenario << " (" << flyer::to_string(m.controller) << ")\n"
            << "  plan duration  " << m.plan_duration << " s, planned in " << m.plan_wall_time << " s\n"
            << "  collisions     " << m.collision_flags << " flags in " << m.colliding_rows << " rows\n"
            << "  min margin     " << m.min_margin << " m\n"
            << "  tracking rms   " << m.rms_tracking_error << " m, max " << m.max_tracking_error << " m\n";
  if (m.controller == flyer::ControllerKind::Mpc) {
    std::cout << "  mpc step       " << m.mpc_mean_step_wall_time << " s mean, " << m.mpc_max_step_wall_time
              << " s max\n";
  }
  std::cout << "  wrote " << m.csv_path << "\n  wrote " << m.metrics_path << "\n";
  return m.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-flyer cargo transport: corridor planning, simulation and control"};
  app.require_subcommand(1);

  std::string path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string controller;
  int samples = 100;

  auto* run = app.add_subcommand("run", "Plan, simulate and write trajectory CSV plus metrics JSON");
  run->add_option("scenario", path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory (default: the scenario's output.dir)");
  run->add_option("--seed", seed, "RNG seed override");
  run->add_option("--workers", workers, "MPC worker threads (default: FLYER_WORKERS or hardware threads)")
      ->check(CLI::PositiveNumber);
  run->add_option("--controller", controller, "Controller override")->check(CLI::IsMember({"pd", "mpc"}));

  auto* validate = app.add_subcommand("validate", "Check a scenario file and list every violation");
  validate->add_option("scenario", path, "Scenario JSON file")->required();

  auto* plan = app.add_subcommand("plan", "Plan only and print sampled reference states as CSV");
  plan->add_option("scenario", path, "Scenario JSON file")->required();
  plan->add_option("--samples", samples, "Number of evenly spaced samples")->check(CLI::Range(2, 1000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalidInput;
  }

  try {
    if (*validate) return cmd_validate(path);
    if (*plan) return cmd_plan(path, samples);
    flyer::RunOptions opts;
    opts.out_dir = out_dir;
    opts.seed = seed;
    opts.workers = workers;
    if (!controller.empty()) opts.controller = flyer::parse_controller_kind(controller);
    return cmd_run(path, opts);
  } catch (const flyer::ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }
}
