// The three dynamics model classes behind one single-step interface:
// state x control x terrain -> next body-frame rates.
//
// NoSlip3D: kinematic bicycle, V^b = (V_w, 0, 0), omega_z = V_w tan(d)/L.
// Slip3D:   single-track force balance with a simplified Pacejka tire
//           (F = mu Fz sin(C atan(B s))) and gravity terms on slopes.
// Learned:  terrain-conditioned MLP predicting (dV^b, dOmega^b).

#pragma once

#include <string>

#include "ovd/elevation_map.hpp"
#include "ovd/geometry.hpp"
#include "ovd/mlp.hpp"
#include "ovd/types.hpp"

namespace ovd {

enum class ModelKind { NoSlip3D, Slip3D, Learned };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Body-frame rates for the next timestep.
struct BodyRates {
  Vec3 velocity;          // V^b, m/s
  Vec3 angular_velocity;  // omega^b, rad/s
  Vec3 acceleration;      // a^b, m/s^2, IMU convention at the current state
};

/// Per-axle tire forces in the tire frame (front axle rotated by steering).
struct TireForces {
  double fx_front = 0.0;
  double fy_front = 0.0;
  double fx_rear = 0.0;
  double fy_rear = 0.0;
};

/// Simplified Pacejka force for one slip state, friction-ellipse clipped:
///   F_x = mu Fz sin(C atan(B kappa)),  F_y = -mu Fz sin(C atan(B alpha)).
/// Requires F_z >= 0.
struct TireForce {
  double fx = 0.0;
  double fy = 0.0;
};
TireForce tire_force(double slip_angle, double slip_ratio, double normal_load,
                     const VehicleParams& params);

/// The assembled Slip3D force balance, exposed for inspection and testing.
struct SlipForces {
  TireForces tires;
  Vec3 body_force;           // F^b, N
  double yaw_accel = 0.0;    // omega_z dot, rad/s^2
  double front_load = 0.0;   // static F_z per axle, N
  double rear_load = 0.0;
};

/// No-slip kinematic step. Steering is clamped to the params limit; dt only
/// enters the acceleration bookkeeping.
BodyRates noslip_step(const VehicleState& state, const ControlInput& u,
                      const VehicleParams& params, double dt);

/// Force assembly for the slip-based model at the given terrain attitude.
/// Throws NonPhysicalParams if an axle's static normal load is negative.
SlipForces slip_forces(const VehicleState& state, const ControlInput& u,
                       const VehicleParams& params,
                       const EulerAngles& terrain_attitude);

/// Slip-based step: slip_forces, then explicit-Euler integration of V^b_x,
/// V^b_y and omega_z over dt (with the body-frame rotation coupling terms).
BodyRates slip_step(const VehicleState& state, const ControlInput& u,
                    const VehicleParams& params,
                    const EulerAngles& terrain_attitude, double dt);

/// Terrain-conditioned learned step: featurize, predict (dV, dOmega), add.
/// Throws ShapeMismatch if the feature dimension disagrees with the network.
BodyRates learned_step(const VehicleState& state, const ControlInput& u,
                       const TerrainPatch& patch, const MLPWeights& weights,
                       const VehicleParams& params, double dt);

}  // namespace ovd
