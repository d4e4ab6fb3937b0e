#include "ovd/models.hpp"

#include <algorithm>
#include <cmath>

#include "ovd/error.hpp"

namespace ovd {

namespace {

// Floor on |V_x| in slip-angle denominators; avoids the low-speed
// singularity.
constexpr double kSpeedFloor = 0.1;

Vec3 convention_acceleration(const VehicleState& state, const Vec3& v_next,
                             double dt, double gravity) {
  return body_acceleration(state.body_velocity, v_next,
                           state.body_angular_velocity, state.orientation, dt,
                           gravity);
}

/// Scale (fx, fy) onto the friction circle of radius limit if it pokes out.
void clip_to_ellipse(double& fx, double& fy, double limit) {
  const double mag = std::hypot(fx, fy);
  if (mag > limit && mag > 0.0) {
    const double k = limit / mag;
    fx *= k;
    fy *= k;
  }
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::NoSlip3D:
      return "NoSlip3D";
    case ModelKind::Slip3D:
      return "Slip3D";
    case ModelKind::Learned:
      return "Learned";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "noslip3d" || lower == "noslip") return ModelKind::NoSlip3D;
  if (lower == "slip3d" || lower == "slip") return ModelKind::Slip3D;
  if (lower == "learned") return ModelKind::Learned;
  throw Error::usage("unknown model kind: " + name);
}

BodyRates noslip_step(const VehicleState& state, const ControlInput& u,
                      const VehicleParams& params, double dt) {
  const double steer =
      std::clamp(u.steering, -params.steering_limit, params.steering_limit);
  BodyRates rates;
  rates.velocity = {u.wheel_speed, 0.0, 0.0};
  rates.angular_velocity = {0.0, 0.0,
                            u.wheel_speed * std::tan(steer) /
                                params.wheelbase()};
  rates.acceleration =
      convention_acceleration(state, rates.velocity, dt, params.gravity);
  return rates;
}

TireForce tire_force(double slip_angle, double slip_ratio, double normal_load,
                     const VehicleParams& params) {
  const double peak = params.friction * normal_load;
  TireForce f;
  f.fx = peak * std::sin(params.tire_shape *
                         std::atan(params.tire_stiffness * slip_ratio));
  f.fy = -peak * std::sin(params.tire_shape *
                          std::atan(params.tire_stiffness * slip_angle));
  clip_to_ellipse(f.fx, f.fy, peak);
  return f;
}

SlipForces slip_forces(const VehicleState& state, const ControlInput& u,
                       const VehicleParams& params,
                       const EulerAngles& terrain_attitude) {
  const double steer =
      std::clamp(u.steering, -params.steering_limit, params.steering_limit);
  const double vx = state.body_velocity.x;
  const double vy = state.body_velocity.y;
  const double wz = state.body_angular_velocity.z;
  const double lf = params.front_axle_distance;
  const double lr = params.rear_axle_distance;
  const double wheelbase = params.wheelbase();
  const double m = params.mass;
  const double g = params.gravity;

  SlipForces out;
  // Static axle load split; no dynamic load transfer.
  out.front_load = m * g * lr / wheelbase;
  out.rear_load = m * g * lf / wheelbase;
  if (out.front_load < 0.0 || out.rear_load < 0.0) {
    throw Error::numerical("NonPhysicalParams", "negative static axle load");
  }

  const double denom = std::max(std::abs(vx), kSpeedFloor);
  const double alpha_front = std::atan((vy + wz * lf) / denom) - steer;
  const double alpha_rear = std::atan((vy - wz * lr) / denom);

  // Lateral force from the tire curve; longitudinal demand from the
  // wheel-speed tracking drive model, split by static load.
  const double drive = m * params.drive_gain * (u.wheel_speed - vx);
  double fx_front = drive * lr / wheelbase;
  double fy_front = tire_force(alpha_front, 0.0, out.front_load, params).fy;
  clip_to_ellipse(fx_front, fy_front, params.friction * out.front_load);

  double fx_rear = drive * lf / wheelbase;
  double fy_rear = tire_force(alpha_rear, 0.0, out.rear_load, params).fy;
  clip_to_ellipse(fx_rear, fy_rear, params.friction * out.rear_load);

  out.tires = {fx_front, fy_front, fx_rear, fy_rear};

  const double cs = std::cos(steer), ss = std::sin(steer);
  const double pitch = terrain_attitude.pitch;
  const double roll = terrain_attitude.roll;
  // cos(beta): angle between the body z-axis and world up.
  const double cos_beta = std::cos(pitch) * std::cos(roll);
  const double wx = state.body_angular_velocity.x;
  const double wy = state.body_angular_velocity.y;

  out.body_force = {
      fx_rear + fx_front * cs - fy_front * ss + m * g * std::sin(pitch),
      fy_rear + fy_front * cs + fx_front * ss + m * g * std::sin(roll),
      m * (g * cos_beta - vx * wy + vy * wx)};
  out.yaw_accel =
      ((fx_front * ss + fy_front * cs) * lf - fy_rear * lr) /
      params.yaw_inertia;
  return out;
}

BodyRates slip_step(const VehicleState& state, const ControlInput& u,
                    const VehicleParams& params,
                    const EulerAngles& terrain_attitude, double dt) {
  const SlipForces f = slip_forces(state, u, params, terrain_attitude);
  const double m = params.mass;
  const double vx = state.body_velocity.x;
  const double vy = state.body_velocity.y;
  const double wz = state.body_angular_velocity.z;

  BodyRates rates;
  rates.velocity = {vx + dt * (f.body_force.x / m + vy * wz),
                    vy + dt * (f.body_force.y / m - vx * wz),
                    0.0};  // ground contact: body V_z stays zero
  rates.angular_velocity = {0.0, 0.0, wz + dt * f.yaw_accel};
  rates.acceleration =
      convention_acceleration(state, rates.velocity, dt, params.gravity);
  return rates;
}

BodyRates learned_step(const VehicleState& state, const ControlInput& u,
                       const TerrainPatch& patch, const MLPWeights& weights,
                       const VehicleParams& params, double dt) {
  const auto features = featurize_raw(state, u, patch);
  const auto delta = predict_delta(weights, features);
  BodyRates rates;
  rates.velocity = state.body_velocity + Vec3{delta[0], delta[1], delta[2]};
  rates.angular_velocity =
      state.body_angular_velocity + Vec3{delta[3], delta[4], delta[5]};
  rates.acceleration =
      convention_acceleration(state, rates.velocity, dt, params.gravity);
  return rates;
}

}  // namespace ovd
