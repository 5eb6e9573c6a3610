#include "flyer/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace flyer {

std::string to_string(ControllerKind k) { return k == ControllerKind::Mpc ? "mpc" : "pd"; }

ControllerKind parse_controller_kind(const std::string& name) {
  if (name == "pd") return ControllerKind::Pd;
  if (name == "mpc") return ControllerKind::Mpc;
  throw std::invalid_argument("unknown controller '" + name + "'");
}

PlanRequest Scenario::plan_request() const {
  PlanRequest r{planning_corridor()};
  r.start = start;
  r.goal = goal;
  r.limits = sim.limits;
  r.degree = degree;
  r.max_scp_iters = max_scp_iters;
  r.trust_region = trust_region;
  r.limit_subdivisions = limit_subdivisions;
  r.orientation_mode = orientation_mode;
  return r;
}

MpcConfig Scenario::mpc_config() const {
  MpcConfig c = mpc;
  c.control_dt = control_dt;
  c.gains = gains;
  c.rng_seed = seed;
  return c;
}

SimConfig Scenario::rollout_config() const {
  SimConfig c = sim;
  if (rollout_cargo && *rollout_cargo != sim.cargo.variant) {
    CargoModel m;
    switch (*rollout_cargo) {
      case CargoVariant::None: m = CargoModel::none(); break;
      case CargoVariant::Constraint: m = CargoModel::constraint(); break;
      case CargoVariant::Composite: m = CargoModel::composite(); break;
      case CargoVariant::Articulated: m = CargoModel::articulated(); break;
    }
    // the rollout model shares the plant's bag and grip, only its structure differs
    m.bag = sim.cargo.bag;
    m.attachment = sim.cargo.attachment;
    c.cargo = m;
  }
  return c;
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += "\n  " + s;
  return out;
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> violations)
    : Error("invalid scenario:" + join(violations)), violations_(std::move(violations)) {}

namespace {

using nlohmann::json;

/// Reads typed fields under a dotted path, recording every problem instead of throwing.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void error(const std::string& path, const std::string& what) { errors_.push_back(path + ": " + what); }

  /// Reports keys of `obj` outside `allowed`; false when obj is not an object.
  bool object(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
      error(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) error(join_path(path, key), "unknown field");
    }
    return true;
  }

  void number(const json& obj, const std::string& path, const std::string& key, double& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      error(join_path(path, key), "expected a finite number");
      return;
    }
    out = v.get<double>();
  }

  void integer(const json& obj, const std::string& path, const std::string& key, int& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(join_path(path, key), "expected an integer");
      return;
    }
    out = v.get<int>();
  }

  void boolean(const json& obj, const std::string& path, const std::string& key, bool& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      error(join_path(path, key), "expected true or false");
      return;
    }
    out = v.get<bool>();
  }

  void unsigned64(const json& obj, const std::string& path, const std::string& key, std::uint64_t& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned()) {
      error(join_path(path, key), "expected a non-negative integer");
      return;
    }
    out = v.get<std::uint64_t>();
  }

  void string(const json& obj, const std::string& path, const std::string& key, std::string& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      error(join_path(path, key), "expected a string");
      return;
    }
    out = v.get<std::string>();
  }

  template <int N>
  bool array(const json& obj, const std::string& path, const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != N) {
      error(join_path(path, key), "expected an array of " + std::to_string(N) + " numbers");
      return false;
    }
    Eigen::Matrix<double, N, 1> tmp;
    for (int i = 0; i < N; ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        error(join_path(path, key), "expected an array of " + std::to_string(N) + " numbers");
        return false;
      }
      tmp[i] = v[i].get<double>();
    }
    out = tmp;
    return true;
  }

  static std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<std::string>& errors_;
};

void read_body(Reader& r, const json& j, const std::string& path, BodyParams& b) {
  if (!r.object(j, path, {"mass_kg", "inertia_diagonal_kg_m2", "collision_radius_m"})) return;
  r.number(j, path, "mass_kg", b.mass);
  r.array<3>(j, path, "inertia_diagonal_kg_m2", b.inertia_diagonal);
  r.number(j, path, "collision_radius_m", b.collision_radius);
}

void read_limits(Reader& r, const json& j, const std::string& path, ActuatorLimits& l) {
  if (!r.object(j, path,
                {"max_force_newtons", "max_torque_newton_meters", "max_velocity_m_per_s",
                 "max_acceleration_m_per_s2", "max_angular_velocity_rad_per_s"})) {
    return;
  }
  r.number(j, path, "max_force_newtons", l.max_force);
  r.number(j, path, "max_torque_newton_meters", l.max_torque);
  r.number(j, path, "max_velocity_m_per_s", l.max_velocity);
  r.number(j, path, "max_acceleration_m_per_s2", l.max_acceleration);
  r.number(j, path, "max_angular_velocity_rad_per_s", l.max_angular_velocity);
}

void read_state(Reader& r, const json& j, const std::string& path, RigidState& s) {
  if (!r.object(j, path,
                {"position_m", "orientation_wxyz", "linear_velocity_m_per_s", "angular_velocity_rad_per_s"})) {
    return;
  }
  if (!j.contains("position_m")) r.error(Reader::join_path(path, "position_m"), "required field missing");
  r.array<3>(j, path, "position_m", s.position);
  Eigen::Vector4d q;
  if (r.array<4>(j, path, "orientation_wxyz", q)) {
    if (q.norm() < 1e-9) {
      r.error(Reader::join_path(path, "orientation_wxyz"), "quaternion must be nonzero");
    } else {
      s.orientation = UnitQuaternion(q);
    }
  }
  r.array<3>(j, path, "linear_velocity_m_per_s", s.linear_velocity);
  r.array<3>(j, path, "angular_velocity_rad_per_s", s.angular_velocity);
}

void read_variant(Reader& r, const std::string& path, const std::string& name, CargoVariant& v) {
  try {
    v = parse_cargo_variant(name);
  } catch (const std::invalid_argument&) {
    r.error(path, "expected one of none, constraint, composite, articulated");
  }
}

void read_cargo(Reader& r, const json& j, const std::string& path, CargoModel& m) {
  if (!r.object(j, path, {"variant", "bag", "handle", "attachment", "internal_link"})) return;
  std::string name = "none";
  r.string(j, path, "variant", name);
  CargoVariant v = CargoVariant::None;
  read_variant(r, Reader::join_path(path, "variant"), name, v);
  switch (v) {
    case CargoVariant::None: m = CargoModel::none(); break;
    case CargoVariant::Constraint: m = CargoModel::constraint(); break;
    case CargoVariant::Composite: m = CargoModel::composite(); break;
    case CargoVariant::Articulated: m = CargoModel::articulated(); break;
  }
  if (j.contains("bag")) read_body(r, j["bag"], Reader::join_path(path, "bag"), m.bag);
  if (j.contains("handle")) read_body(r, j["handle"], Reader::join_path(path, "handle"), m.handle);
  if (j.contains("attachment")) {
    const std::string p = Reader::join_path(path, "attachment");
    const json& a = j["attachment"];
    if (r.object(a, p,
                 {"linear_stiffness_n_per_m", "linear_damping_n_s_per_m", "angular_stiffness_nm_per_rad",
                  "angular_damping_nm_s_per_rad", "grip_point_robot_m", "grip_point_bag_m",
                  "breaking_force_newtons"})) {
      r.number(a, p, "linear_stiffness_n_per_m", m.attachment.linear_stiffness);
      r.number(a, p, "linear_damping_n_s_per_m", m.attachment.linear_damping);
      r.number(a, p, "angular_stiffness_nm_per_rad", m.attachment.angular_stiffness);
      r.number(a, p, "angular_damping_nm_s_per_rad", m.attachment.angular_damping);
      r.array<3>(a, p, "grip_point_robot_m", m.attachment.grip_point_robot);
      r.array<3>(a, p, "grip_point_bag_m", m.attachment.grip_point_bag);
      r.number(a, p, "breaking_force_newtons", m.attachment.breaking_force);
    }
  }
  if (j.contains("internal_link")) {
    const std::string p = Reader::join_path(path, "internal_link");
    const json& a = j["internal_link"];
    if (r.object(a, p,
                 {"linear_stiffness_n_per_m", "linear_damping_n_s_per_m", "angular_stiffness_nm_per_rad",
                  "angular_damping_nm_s_per_rad"})) {
      r.number(a, p, "linear_stiffness_n_per_m", m.internal.linear_stiffness);
      r.number(a, p, "linear_damping_n_s_per_m", m.internal.linear_damping);
      r.number(a, p, "angular_stiffness_nm_per_rad", m.internal.angular_stiffness);
      r.number(a, p, "angular_damping_nm_s_per_rad", m.internal.angular_damping);
    }
  }
}

void read_gains(Reader& r, const json& j, const std::string& path, PdGains& g) {
  if (!r.object(j, path, {"kp_position_n_per_m", "kd_position_n_s_per_m", "kp_attitude_nm_per_rad",
                          "kd_attitude_nm_s_per_rad"})) {
    return;
  }
  r.number(j, path, "kp_position_n_per_m", g.kp_pos);
  r.number(j, path, "kd_position_n_s_per_m", g.kd_pos);
  r.number(j, path, "kp_attitude_nm_per_rad", g.kp_att);
  r.number(j, path, "kd_attitude_nm_s_per_rad", g.kd_att);
}

void read_mpc(Reader& r, const json& j, const std::string& path, MpcConfig& c) {
  if (!r.object(j, path,
                {"num_samples", "horizon_s", "apply_count", "sigma_position_m", "sigma_velocity_m_per_s",
                 "sigma_orientation_rad", "w_track", "w_relvel", "w_coll", "collision_penalty", "w_margin",
                 "carry_target", "workers"})) {
    return;
  }
  r.integer(j, path, "num_samples", c.num_samples);
  r.number(j, path, "horizon_s", c.horizon);
  r.integer(j, path, "apply_count", c.apply_count);
  r.number(j, path, "sigma_position_m", c.sigma_position);
  r.number(j, path, "sigma_velocity_m_per_s", c.sigma_velocity);
  r.number(j, path, "sigma_orientation_rad", c.sigma_orientation);
  r.number(j, path, "w_track", c.w_track);
  r.number(j, path, "w_relvel", c.w_relvel);
  r.number(j, path, "w_coll", c.w_coll);
  r.number(j, path, "collision_penalty", c.collision_penalty);
  r.number(j, path, "w_margin", c.w_margin);
  r.boolean(j, path, "carry_target", c.carry_target);
  r.integer(j, path, "workers", c.workers);
}

template <class F>
void check(std::vector<std::string>& errors, const std::string& path, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    errors.push_back(path + ": " + e.what());
  }
}

const char* kAxis[] = {"x", "y", "z"};

/// Physical cross-validation of a structurally valid scenario.
void cross_validate(const Scenario& s, std::vector<std::string>& errors) {
  bool boxes_ok = !s.boxes.empty();
  if (s.boxes.empty()) errors.push_back("corridor.boxes: at least one box is required");
  if (!(s.planning_clearance >= 0.0)) errors.push_back("corridor.planning_clearance_m: must be >= 0");
  if (boxes_ok) {
    for (const auto& v : corridor_chain_violations(s.boxes)) errors.push_back("corridor.boxes: " + v);
  }
  check(errors, "robot", [&] { s.sim.robot.validate(); });
  check(errors, "limits", [&] { s.sim.limits.validate(); });
  check(errors, "cargo", [&] { s.sim.cargo.validate(); });
  if (!(s.control_dt > 0.0)) errors.push_back("controller.control_dt_s: must be > 0");
  if (!(s.settle_time >= 0.0)) errors.push_back("controller.settle_time_s: must be >= 0");
  check(errors, "controller.pd_gains", [&] { s.gains.validate(); });
  if (s.controller == ControllerKind::Mpc) check(errors, "controller.mpc", [&] { s.mpc_config().validate(); });
  if (s.degree < 5) errors.push_back("planner.degree: must be >= 5");
  if (s.max_scp_iters < 0) errors.push_back("planner.max_scp_iters: must be >= 0");
  if (!(s.trust_region > 0.0 && s.trust_region < 1.0)) errors.push_back("planner.trust_region: must lie in (0, 1)");
  if (s.limit_subdivisions < 1) errors.push_back("planner.limit_subdivisions: must be >= 1");

  if (!(s.sim.dt > 0.0 && s.sim.dt <= Dynamics::kMaxDt)) {
    errors.push_back("sim_dt_s: must lie in (0, " + std::to_string(Dynamics::kMaxDt) + "]");
  } else {
    std::optional<Dynamics> plant;
    check(errors, "sim_dt_s", [&] { plant.emplace(s.sim); });
    if (plant && s.control_dt > 0.0) check(errors, "controller.control_dt_s", [&] { substeps(*plant, s.control_dt); });
    if (s.controller == ControllerKind::Mpc && s.rollout_cargo) {
      check(errors, "rollout_cargo_variant", [&] { Dynamics model(s.rollout_config()); });
    }
  }

  if (boxes_ok && errors.empty()) {
    const Corridor c = s.corridor();
    for (const auto& [which, st] : {std::pair{"start", &s.start}, std::pair{"goal", &s.goal}}) {
      if (!contains_point(c, st->position)) {
        errors.push_back(std::string(which) + ".position_m: outside the corridor");
      } else if (!contains_point(s.planning_corridor(), st->position)) {
        errors.push_back(std::string(which) + ".position_m: closer than planning_clearance_m to a wall");
      }
    }
    if (errors.empty()) check(errors, "planner", [&] { s.plan_request().validate(); });
  }
}

Scenario read_scenario(const std::string& text, std::vector<std::string>& errors) {
  Scenario s;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    errors.push_back(std::string("document: ") + e.what());
    return s;
  }
  Reader r(errors);
  if (!r.object(j, "",
                {"name", "corridor", "robot", "limits", "cargo", "rollout_cargo_variant", "start", "goal",
                 "planner", "controller", "sim_dt_s", "seed", "output"})) {
    return s;
  }
  r.string(j, "", "name", s.name);
  if (!j.contains("corridor")) {
    r.error("corridor", "required field missing");
  } else if (r.object(j["corridor"], "corridor", {"boxes", "planning_clearance_m"})) {
    const json& c = j["corridor"];
    r.number(c, "corridor", "planning_clearance_m", s.planning_clearance);
    if (!c.contains("boxes") || !c["boxes"].is_array()) {
      r.error("corridor.boxes", "expected an array of boxes");
    } else {
      for (std::size_t i = 0; i < c["boxes"].size(); ++i) {
        const std::string p = "corridor.boxes[" + std::to_string(i) + "]";
        const json& b = c["boxes"][i];
        if (!r.object(b, p, {"min_m", "max_m"})) continue;
        Vec3 lo, hi;
        if (!r.array<3>(b, p, "min_m", lo) || !r.array<3>(b, p, "max_m", hi)) {
          if (!b.contains("min_m") || !b.contains("max_m")) r.error(p, "needs min_m and max_m");
          continue;
        }
        std::string bad;
        for (int a = 0; a < 3; ++a) {
          if (!(lo[a] < hi[a])) bad += std::string(bad.empty() ? "" : ",") + kAxis[a];
        }
        if (bad.empty()) {
          s.boxes.emplace_back(lo, hi);
        } else {
          r.error(p, "box " + std::to_string(i) + " has min >= max on axis " + bad);
        }
      }
    }
  }
  if (j.contains("robot")) read_body(r, j["robot"], "robot", s.sim.robot);
  if (j.contains("limits")) read_limits(r, j["limits"], "limits", s.sim.limits);
  if (j.contains("cargo")) read_cargo(r, j["cargo"], "cargo", s.sim.cargo);
  if (j.contains("rollout_cargo_variant")) {
    std::string name;
    r.string(j, "", "rollout_cargo_variant", name);
    CargoVariant v = CargoVariant::None;
    read_variant(r, "rollout_cargo_variant", name, v);
    s.rollout_cargo = v;
  }
  for (const auto& [key, st] : {std::pair{"start", &s.start}, std::pair{"goal", &s.goal}}) {
    if (!j.contains(key)) {
      r.error(key, "required field missing");
    } else {
      read_state(r, j[key], key, *st);
    }
  }
  if (j.contains("planner")) {
    const json& p = j["planner"];
    if (r.object(p, "planner",
                 {"degree", "max_scp_iters", "trust_region", "limit_subdivisions", "orientation_mode"})) {
      r.integer(p, "planner", "degree", s.degree);
      r.integer(p, "planner", "max_scp_iters", s.max_scp_iters);
      r.number(p, "planner", "trust_region", s.trust_region);
      r.integer(p, "planner", "limit_subdivisions", s.limit_subdivisions);
      std::string mode = to_string(s.orientation_mode);
      r.string(p, "planner", "orientation_mode", mode);
      try {
        s.orientation_mode = parse_orientation_mode(mode);
      } catch (const std::invalid_argument&) {
        r.error("planner.orientation_mode", "expected polynomial or face_forward");
      }
    }
  }
  if (j.contains("controller")) {
    const json& c = j["controller"];
    if (r.object(c, "controller", {"type", "control_dt_s", "settle_time_s", "pd_gains", "mpc"})) {
      std::string type = to_string(s.controller);
      r.string(c, "controller", "type", type);
      try {
        s.controller = parse_controller_kind(type);
      } catch (const std::invalid_argument&) {
        r.error("controller.type", "expected pd or mpc");
      }
      r.number(c, "controller", "control_dt_s", s.control_dt);
      r.number(c, "controller", "settle_time_s", s.settle_time);
      if (c.contains("pd_gains")) read_gains(r, c["pd_gains"], "controller.pd_gains", s.gains);
      if (c.contains("mpc")) read_mpc(r, c["mpc"], "controller.mpc", s.mpc);
    }
  }
  r.number(j, "", "sim_dt_s", s.sim.dt);
  r.unsigned64(j, "", "seed", s.seed);
  if (j.contains("output") && r.object(j["output"], "output", {"dir"})) r.string(j["output"], "output", "dir", s.output_dir);

  if (errors.empty()) cross_validate(s, errors);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  std::vector<std::string> errors;
  Scenario s = read_scenario(json_text, errors);
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ScenarioError({std::string("file: ") + e.what()});
  }
  return parse_scenario(text);
}

std::vector<std::string> validate_scenario_text(const std::string& json_text) {
  std::vector<std::string> errors;
  read_scenario(json_text, errors);
  return errors;
}

std::vector<std::string> validate_scenario(const std::string& path) {
  try {
    return validate_scenario_text(read_file(path));
  } catch (const std::runtime_error& e) {
    return {std::string("file: ") + e.what()};
  }
}

}  // namespace flyer
