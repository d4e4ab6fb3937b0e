// Domain value types: vehicle state, controls, trajectories, vehicle
// parameters. All immutable by convention once validated.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ovd/geometry.hpp"

namespace ovd {

/// Full rigid-body state at one timestep. Body frame is x-forward, y-left,
/// z-up; orientation rotates body vectors into the world frame.
///
/// body_acceleration follows the IMU convention (includes the gravity
/// reaction): a^b = (V^b_next - V^b)/dt + omega^b x V^b + R^T (0,0,g).
/// At rest on flat ground it reads (0, 0, g).
struct VehicleState {
  double time = 0.0;               // s
  Vec3 position;                   // m, world frame
  Quat orientation;                // world <- body
  Vec3 body_velocity;              // m/s
  Vec3 body_angular_velocity;      // rad/s
  Vec3 body_acceleration;          // m/s^2, IMU convention
};

struct ControlInput {
  double steering = 0.0;     // rad, positive = left turn
  double wheel_speed = 0.0;  // m/s
};

/// Time-indexed state/control sequence at fixed dt (0.1 s by default).
struct Trajectory {
  std::vector<VehicleState> states;
  std::vector<ControlInput> controls;  // same length as states
  double dt = 0.1;

  std::size_t length() const { return states.size(); }
  std::size_t horizon() const {
    return states.empty() ? 0 : states.size() - 1;
  }
};

/// Single-track vehicle parameters plus the pose-projection extras
/// (track width, ground clearance) that ride along in the same config file.
struct VehicleParams {
  double mass = 800.0;              // kg
  double yaw_inertia = 600.0;       // kg m^2
  double front_axle_distance = 1.4; // m, CG to front axle
  double rear_axle_distance = 1.2;  // m, CG to rear axle
  double gravity = 9.81;            // m/s^2
  double tire_stiffness = 4.0;      // Pacejka B
  double tire_shape = 1.5;          // Pacejka C
  double friction = 0.8;            // mu
  double drive_gain = 2.0;          // 1/s, wheel-speed tracking
  double steering_limit = 0.5;      // rad
  double track_width = 1.5;         // m, pose projection only
  double ground_clearance = 0.4;    // m, chassis z above contact plane

  double wheelbase() const { return front_axle_distance + rear_axle_distance; }
};

/// Throws Error::data on any violated invariant.
void validate(const VehicleParams& p);
void validate(const VehicleState& s);
void validate(const Trajectory& t);

/// Load/save the plain-text key/value params file.
VehicleParams load_vehicle_params(const std::string& path);
void save_vehicle_params(const VehicleParams& p, const std::string& path);

/// Body acceleration under the shared IMU convention, from the velocity at
/// this step and the next.
Vec3 body_acceleration(const Vec3& v, const Vec3& v_next, const Vec3& omega,
                       const Quat& orientation, double dt, double gravity);

/// Recompute every state's body_acceleration with the shared convention
/// (forward difference; the final state copies its predecessor). Ground
/// truth and rollouts both pass through here so the H-MNE acceleration
/// column compares like with like.
void finalize_accelerations(std::vector<VehicleState>& states, double dt,
                            double gravity);

}  // namespace ovd
