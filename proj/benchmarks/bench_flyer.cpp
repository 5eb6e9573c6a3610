#include <benchmark/benchmark.h>

#include <random>

#include "flyer/control.hpp"
#include "flyer/planner_global.hpp"
#include "flyer/planner_local.hpp"
#include "flyer/qp.hpp"
#include "flyer/simdyn.hpp"

namespace {

using namespace flyer;

std::vector<Aabb> five_boxes() {
  return {Aabb(Vec3(0, 0, 0), Vec3(2, 1, 1)), Aabb(Vec3(1.2, 0, 0), Vec3(2, 3, 1)),
          Aabb(Vec3(1.2, 2.2, 0), Vec3(4, 3, 1)), Aabb(Vec3(3.2, 2.2, 0), Vec3(4, 3, 3)),
          Aabb(Vec3(3.2, 2.2, 2.2), Vec3(6, 3, 3))};
}

PlanRequest five_box_request() {
  PlanRequest r{Corridor(five_boxes())};
  r.start.position = Vec3(0.4, 0.5, 0.5);
  r.goal.position = Vec3(5.6, 2.6, 2.6);
  r.limits.max_velocity = 0.2;
  r.limits.max_acceleration = 0.05;
  return r;
}

PlanRequest l_corner_request() {
  PlanRequest r{Corridor({Aabb(Vec3(-0.5, -0.6, -0.6), Vec3(3, 0.6, 0.6)),
                          Aabb(Vec3(1.8, -0.6, -0.6), Vec3(3, 3, 0.6))})
                    .shrunk(0.26)};
  r.goal.position = Vec3(2.4, 2.4, 0);
  r.limits.max_velocity = 0.2;
  r.limits.max_acceleration = 0.03;
  return r;
}

// One QP of the time search: five segments at their initial durations.
void BM_SplineQpSolve(benchmark::State& st) {
  const PlanRequest req = five_box_request();
  const QpProblem qp = build_spline_qp(req, std::vector<double>(5, 20.0));
  for (auto _ : st) benchmark::DoNotOptimize(solve_qp(qp));
}
BENCHMARK(BM_SplineQpSolve)->Unit(benchmark::kMillisecond);

void BM_PlanGlobalFiveBox(benchmark::State& st) {
  const PlanRequest req = five_box_request();
  for (auto _ : st) benchmark::DoNotOptimize(plan_global(req));
}
BENCHMARK(BM_PlanGlobalFiveBox)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_PlanLocal(benchmark::State& st) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  KinematicState a, b;
  a.state.linear_velocity = Vec3(n(rng), n(rng), n(rng)) * 0.1;
  b.state.position = Vec3(n(rng), n(rng), n(rng));
  b.state.orientation = UnitQuaternion::from_axis_angle(Vec3(0, 0, 1), 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(plan_local(a, b, 3.0));
}
BENCHMARK(BM_PlanLocal)->Unit(benchmark::kMicrosecond);

void BM_SimStep(benchmark::State& st) {
  SimConfig cfg;
  cfg.cargo = st.range(0) ? CargoModel::articulated() : CargoModel::constraint();
  const Dynamics dyn(cfg);
  SimState s = dyn.neutral_state(RigidState{});
  const Wrench u{Vec3(0.1, 0.05, 0), Vec3(0, 0, 0.01)};
  for (auto _ : st) {
    s = dyn.step(s, u);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_SimStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_MpcStep(benchmark::State& st) {
  const PlanRequest req = l_corner_request();
  const GlobalPlan plan = plan_global(req);
  SimConfig cfg;
  cfg.limits.max_acceleration = 0.03;
  cfg.cargo = CargoModel::constraint();
  const Dynamics dyn(cfg);
  const Corridor corridor({Aabb(Vec3(-0.5, -0.6, -0.6), Vec3(3, 0.6, 0.6)),
                           Aabb(Vec3(1.8, -0.6, -0.6), Vec3(3, 3, 0.6))});
  RigidState r;
  r.position = plan.sample(10.0).state.position;
  const SimState s = dyn.neutral_state(r);
  MpcConfig mpc;
  mpc.num_samples = static_cast<int>(st.range(0));
  mpc.workers = static_cast<int>(st.range(1));
  std::uint64_t k = 0;
  for (auto _ : st) benchmark::DoNotOptimize(mpc_step(s, plan, 10.0, mpc, dyn, corridor, k++));
}
BENCHMARK(BM_MpcStep)->Args({32, 1})->Args({32, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
