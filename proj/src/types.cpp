#include "ovd/types.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ovd/error.hpp"

namespace ovd {

void validate(const VehicleParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error::data("ConfigInvalid",
                        std::string(name) + " must be positive and finite");
    }
  };
  positive(p.mass, "mass");
  positive(p.yaw_inertia, "yaw_inertia");
  positive(p.front_axle_distance, "front_axle");
  positive(p.rear_axle_distance, "rear_axle");
  positive(p.gravity, "gravity");
  positive(p.friction, "friction");
  positive(p.tire_stiffness, "tire_b");
  positive(p.tire_shape, "tire_c");
  positive(p.drive_gain, "drive_gain");
  positive(p.steering_limit, "steer_limit");
  positive(p.track_width, "track_width");
  if (p.steering_limit >= kPi / 2.0) {
    throw Error::data("ConfigInvalid", "steer_limit must be < pi/2");
  }
  if (!(p.ground_clearance >= 0.0)) {
    throw Error::data("ConfigInvalid", "clearance must be non-negative");
  }
}

void validate(const VehicleState& s) {
  if (!std::isfinite(s.time) || !s.position.finite() ||
      !s.orientation.finite() || !s.body_velocity.finite() ||
      !s.body_angular_velocity.finite() || !s.body_acceleration.finite()) {
    throw Error::data("ConfigInvalid", "vehicle state has non-finite entries");
  }
  if (std::abs(s.orientation.norm() - 1.0) > 1e-9) {
    throw Error::data("ConfigInvalid", "orientation quaternion not unit norm");
  }
}

void validate(const Trajectory& t) {
  if (t.states.size() < 2) {
    throw Error::data("EmptyTrajectory", "trajectory needs at least 2 states");
  }
  if (t.controls.size() != t.states.size()) {
    throw Error::data("ShapeMismatch", "controls/states length mismatch");
  }
  if (!(t.dt > 0.0)) {
    throw Error::data("ConfigInvalid", "trajectory dt must be positive");
  }
  for (std::size_t i = 0; i + 1 < t.states.size(); ++i) {
    const double gap = t.states[i + 1].time - t.states[i].time;
    if (std::abs(gap - t.dt) > 1e-9) {
      throw Error::data("ConfigInvalid",
                        "trajectory timestamps not uniformly spaced at dt");
    }
  }
  for (const auto& s : t.states) validate(s);
}

namespace {

const std::map<std::string, double VehicleParams::*>& param_fields() {
  static const std::map<std::string, double VehicleParams::*> fields = {
      {"mass", &VehicleParams::mass},
      {"yaw_inertia", &VehicleParams::yaw_inertia},
      {"front_axle", &VehicleParams::front_axle_distance},
      {"rear_axle", &VehicleParams::rear_axle_distance},
      {"gravity", &VehicleParams::gravity},
      {"tire_b", &VehicleParams::tire_stiffness},
      {"tire_c", &VehicleParams::tire_shape},
      {"friction", &VehicleParams::friction},
      {"drive_gain", &VehicleParams::drive_gain},
      {"steer_limit", &VehicleParams::steering_limit},
      {"track_width", &VehicleParams::track_width},
      {"clearance", &VehicleParams::ground_clearance},
  };
  return fields;
}

}  // namespace

VehicleParams load_vehicle_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::data("ParseError", "cannot open params file " + path);
  VehicleParams p;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    double value;
    if (!(ss >> key >> value)) {
      throw Error::data("ParseError", path + ":" + std::to_string(lineno) +
                                          ": expected `key value`");
    }
    const auto& fields = param_fields();
    auto it = fields.find(key);
    if (it == fields.end()) {
      throw Error::data("ParseError", path + ": unknown param key " + key);
    }
    p.*(it->second) = value;
  }
  validate(p);
  return p;
}

void save_vehicle_params(const VehicleParams& p, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [key, member] : param_fields()) {
    out << key << ' ' << p.*member << '\n';
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw Error::data("ParseError", "cannot write " + tmp);
    f << out.str();
  }
  std::filesystem::rename(tmp, path);
}

Vec3 body_acceleration(const Vec3& v, const Vec3& v_next, const Vec3& omega,
                       const Quat& orientation, double dt, double gravity) {
  const Vec3 dv = (v_next - v) / dt;
  const Vec3 coriolis = cross(omega, v);
  const Vec3 gravity_body =
      rotate_inverse(orientation, Vec3{0.0, 0.0, gravity});
  return dv + coriolis + gravity_body;
}

void finalize_accelerations(std::vector<VehicleState>& states, double dt,
                            double gravity) {
  if (states.size() < 2) return;
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    states[i].body_acceleration = body_acceleration(
        states[i].body_velocity, states[i + 1].body_velocity,
        states[i].body_angular_velocity, states[i].orientation, dt, gravity);
  }
  states.back().body_acceleration = states[states.size() - 2].body_acceleration;
}

}  // namespace ovd
