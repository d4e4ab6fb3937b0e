#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ovd/error.hpp"
#include "ovd/models.hpp"
#include "ovd/rng.hpp"

using namespace ovd;

namespace {

VehicleState state_with(const Vec3& v, const Vec3& omega,
                        const EulerAngles& att = {}) {
  VehicleState s;
  s.orientation = quat_from_euler(att);
  s.body_velocity = v;
  s.body_angular_velocity = omega;
  return s;
}

/// Independent hand assembly of the slip-model force balance. Kept free of
/// any calls into slip_forces so the two paths can disagree.
struct HandForces {
  double fxf, fyf, fxr, fyr;
  double fbx, fby, fbz;
  double wzdot;
};

HandForces hand_assemble(const VehicleState& s, const ControlInput& u,
                         const VehicleParams& p, double roll, double pitch) {
  const double eps = 0.1;
  const double steer = std::clamp(u.steering, -p.steering_limit,
                                  p.steering_limit);
  const double vx = s.body_velocity.x, vy = s.body_velocity.y;
  const double wz = s.body_angular_velocity.z;
  const double lf = p.front_axle_distance, lr = p.rear_axle_distance;
  const double lfr = lf + lr;
  const double denom = std::max(std::abs(vx), eps);
  const double af = std::atan((vy + wz * lf) / denom) - steer;
  const double ar = std::atan((vy - wz * lr) / denom);

  const double fzf = p.mass * p.gravity * lr / lfr;
  const double fzr = p.mass * p.gravity * lf / lfr;

  auto pacejka_lat = [&](double alpha, double fz) {
    return -p.friction * fz *
           std::sin(p.tire_shape * std::atan(p.tire_stiffness * alpha));
  };
  auto ellipse = [&](double& fx, double& fy, double limit) {
    const double mag = std::sqrt(fx * fx + fy * fy);
    if (mag > limit && mag > 0.0) {
      fx *= limit / mag;
      fy *= limit / mag;
    }
  };

  const double drive = p.mass * p.drive_gain * (u.wheel_speed - vx);
  double fxf = drive * lr / lfr;
  double fyf = pacejka_lat(af, fzf);
  ellipse(fxf, fyf, p.friction * fzf);
  double fxr = drive * lf / lfr;
  double fyr = pacejka_lat(ar, fzr);
  ellipse(fxr, fyr, p.friction * fzr);

  const double cs = std::cos(steer), ss = std::sin(steer);
  HandForces h;
  h.fxf = fxf;
  h.fyf = fyf;
  h.fxr = fxr;
  h.fyr = fyr;
  h.fbx = fxr + fxf * cs - fyf * ss + p.mass * p.gravity * std::sin(pitch);
  h.fby = fyr + fyf * cs + fxf * ss + p.mass * p.gravity * std::sin(roll);
  const double cos_beta = std::cos(pitch) * std::cos(roll);
  h.fbz = p.mass * (p.gravity * cos_beta -
                    vx * s.body_angular_velocity.y +
                    vy * s.body_angular_velocity.x);
  h.wzdot = ((fxf * ss + fyf * cs) * lf - fyr * lr) / p.yaw_inertia;
  return h;
}

}  // namespace

TEST_CASE("noslip_step straight line") {
  VehicleParams p;
  const BodyRates r = noslip_step(state_with({2, 0, 0}, {}),
                                  {0.0, 2.0}, p, 0.1);
  CHECK(r.velocity.x == 2.0);
  CHECK(r.velocity.y == 0.0);
  CHECK(r.velocity.z == 0.0);
  CHECK(r.angular_velocity.z == 0.0);
}

TEST_CASE("noslip_step yaw rate formula, direct substitution") {
  VehicleParams p;
  p.front_axle_distance = 0.5;
  p.rear_axle_distance = 0.5;
  p.steering_limit = 1.0;
  const BodyRates r = noslip_step(state_with({2, 0, 0}, {}),
                                  {kPi / 4.0, 2.0}, p, 0.1);
  CHECK(r.angular_velocity.z == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("noslip_step hand evaluation of the yaw rate") {
  VehicleParams p;
  p.front_axle_distance = 1.3;
  p.rear_axle_distance = 1.3;
  const BodyRates r = noslip_step(state_with({5, 0, 0}, {}),
                                  {0.2, 5.0}, p, 0.1);
  CHECK(r.angular_velocity.z ==
        doctest::Approx(5.0 * std::tan(0.2) / 2.6).epsilon(1e-12));
  CHECK(r.angular_velocity.z == doctest::Approx(0.38995).epsilon(1e-4));
}

TEST_CASE("noslip_step clamps steering to the limit") {
  VehicleParams p;
  const BodyRates r = noslip_step(state_with({3, 0, 0}, {}),
                                  {5.0, 3.0}, p, 0.1);
  CHECK(r.angular_velocity.z ==
        doctest::Approx(3.0 * std::tan(p.steering_limit) / p.wheelbase()));
}

TEST_CASE("noslip lateral and vertical velocity are exactly zero") {
  VehicleParams p;
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const BodyRates r =
        noslip_step(state_with({rng.uniform(0, 10), rng.uniform(-2, 2), 0},
                               {0, 0, rng.uniform(-1, 1)}),
                    {rng.uniform(-0.4, 0.4), rng.uniform(1, 9)}, p, 0.1);
    CHECK(r.velocity.y == 0.0);
    CHECK(r.velocity.z == 0.0);
    CHECK(r.angular_velocity.x == 0.0);
    CHECK(r.angular_velocity.y == 0.0);
  }
}

TEST_CASE("tire_force zero slip gives zero force") {
  VehicleParams p;
  const TireForce f = tire_force(0.0, 0.0, 3000.0, p);
  CHECK(f.fx == 0.0);
  CHECK(f.fy == 0.0);
}

TEST_CASE("tire_force linear-regime slope is -mu Fz B C") {
  VehicleParams p;
  const double fz = 2500.0;
  const double h = 1e-7;
  const TireForce f = tire_force(h, 0.0, fz, p);
  const double slope = f.fy / h;
  CHECK(slope == doctest::Approx(-p.friction * fz * p.tire_stiffness *
                                 p.tire_shape)
                     .epsilon(1e-4));
}

TEST_CASE("tire_force saturates below the friction bound") {
  VehicleParams p;
  const double fz = 4000.0;
  const TireForce f = tire_force(10.0, 0.0, fz, p);
  CHECK(std::abs(f.fy) <= p.friction * fz + 1e-9);
}

TEST_CASE("tire_force is odd in slip angle and ratio, ellipse-bounded") {
  VehicleParams p;
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-2, 2);
    const double k = rng.uniform(-2, 2);
    const double fz = rng.uniform(100, 5000);
    const TireForce f = tire_force(a, k, fz, p);
    const TireForce g = tire_force(-a, -k, fz, p);
    CHECK(f.fx == doctest::Approx(-g.fx).epsilon(1e-12));
    CHECK(f.fy == doctest::Approx(-g.fy).epsilon(1e-12));
    CHECK(std::hypot(f.fx, f.fy) <= p.friction * fz + 1e-6);
  }
}

TEST_CASE("slip_step equilibrium: no forces, load on the axles") {
  VehicleParams p;
  const VehicleState s = state_with({5, 0, 0}, {0, 0, 0});
  const SlipForces f = slip_forces(s, {0.0, 5.0}, p, {});
  CHECK(f.tires.fx_front == doctest::Approx(0.0));
  CHECK(f.tires.fy_front == doctest::Approx(0.0));
  CHECK(f.tires.fx_rear == doctest::Approx(0.0));
  CHECK(f.tires.fy_rear == doctest::Approx(0.0));
  CHECK(f.body_force.z == doctest::Approx(p.mass * p.gravity));
  CHECK(f.yaw_accel == doctest::Approx(0.0));
  const BodyRates r = slip_step(s, {0.0, 5.0}, p, {}, 0.1);
  CHECK(r.velocity.x == doctest::Approx(5.0));
  CHECK(r.velocity.y == doctest::Approx(0.0));
  CHECK(r.angular_velocity.z == doctest::Approx(0.0));
}

TEST_CASE("slip_step turn direction and magnitude vs hand assembly") {
  VehicleParams p;
  const VehicleState s = state_with({5, 0, 0}, {0, 0, 0});
  const ControlInput u{0.1, 5.0};
  const SlipForces f = slip_forces(s, u, p, {});
  CHECK(f.yaw_accel > 0.0);  // steering left turns left
  const HandForces h = hand_assemble(s, u, p, 0.0, 0.0);
  CHECK(f.yaw_accel == doctest::Approx(h.wzdot).epsilon(1e-12));
  CHECK(f.body_force.x == doctest::Approx(h.fbx).epsilon(1e-12));
  CHECK(f.body_force.y == doctest::Approx(h.fby).epsilon(1e-12));
}

TEST_CASE("slip_step pitch gravity term enters F_x exactly") {
  VehicleParams p;
  const VehicleState s = state_with({5, 0, 0}, {0, 0, 0});
  const ControlInput u{0.0, 5.0};
  const SlipForces flat = slip_forces(s, u, p, {});
  const SlipForces pitched = slip_forces(s, u, p, {0.0, 0.2, 0.0});
  CHECK(pitched.body_force.x - flat.body_force.x ==
        doctest::Approx(p.mass * p.gravity * std::sin(0.2)).epsilon(1e-12));
}

TEST_CASE("slip forces match the hand-assembled oracle on random states") {
  VehicleParams p;
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    VehicleState s = state_with(
        {rng.uniform(0.5, 12), rng.uniform(-3, 3), 0},
        {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
         rng.uniform(-1.5, 1.5)});
    const ControlInput u{rng.uniform(-0.5, 0.5), rng.uniform(1, 12)};
    const double roll = rng.uniform(-0.3, 0.3);
    const double pitch = rng.uniform(-0.3, 0.3);
    const SlipForces f = slip_forces(s, u, p, {roll, pitch, 0.0});
    const HandForces h = hand_assemble(s, u, p, roll, pitch);
    CHECK(f.tires.fx_front == doctest::Approx(h.fxf).epsilon(1e-9));
    CHECK(f.tires.fy_front == doctest::Approx(h.fyf).epsilon(1e-9));
    CHECK(f.tires.fx_rear == doctest::Approx(h.fxr).epsilon(1e-9));
    CHECK(f.tires.fy_rear == doctest::Approx(h.fyr).epsilon(1e-9));
    CHECK(f.body_force.x == doctest::Approx(h.fbx).epsilon(1e-9));
    CHECK(f.body_force.y == doctest::Approx(h.fby).epsilon(1e-9));
    CHECK(f.body_force.z == doctest::Approx(h.fbz).epsilon(1e-9));
    CHECK(f.yaw_accel == doctest::Approx(h.wzdot).epsilon(1e-9));
  }
}

TEST_CASE("per-axle forces respect the friction ellipse") {
  VehicleParams p;
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    VehicleState s = state_with({rng.uniform(0.5, 12), rng.uniform(-4, 4), 0},
                                {0, 0, rng.uniform(-2, 2)});
    const ControlInput u{rng.uniform(-0.5, 0.5), rng.uniform(0, 15)};
    const SlipForces f = slip_forces(s, u, p, {});
    CHECK(std::hypot(f.tires.fx_front, f.tires.fy_front) <=
          p.friction * f.front_load + 1e-6);
    CHECK(std::hypot(f.tires.fx_rear, f.tires.fy_rear) <=
          p.friction * f.rear_load + 1e-6);
  }
}

TEST_CASE("very stiff tires recover the kinematic steady-state yaw rate") {
  VehicleParams p;
  p.tire_stiffness *= 100.0;
  const double vx = 6.0;
  for (double steer : {0.05, 0.1, 0.2}) {
    VehicleState s = state_with({vx, 0, 0}, {0, 0, 0});
    ControlInput u{steer, vx};
    // March to steady state.
    for (int i = 0; i < 400; ++i) {
      const BodyRates r = slip_step(s, u, p, {}, 0.01);
      s.body_velocity = r.velocity;
      s.body_angular_velocity = r.angular_velocity;
    }
    const double expected = vx * std::tan(steer) / p.wheelbase();
    CHECK(s.body_angular_velocity.z ==
          doctest::Approx(expected).epsilon(0.05));
  }
}

TEST_CASE("steps are pure: identical inputs give identical outputs") {
  VehicleParams p;
  const VehicleState s = state_with({7, 1, 0}, {0.1, -0.2, 0.8},
                                    {0.05, -0.1, 0.3});
  const ControlInput u{0.21, 8.0};
  const BodyRates a = slip_step(s, u, p, {0.05, -0.1, 0.0}, 0.1);
  const BodyRates b = slip_step(s, u, p, {0.05, -0.1, 0.0}, 0.1);
  CHECK(a.velocity.x == b.velocity.x);
  CHECK(a.velocity.y == b.velocity.y);
  CHECK(a.angular_velocity.z == b.angular_velocity.z);
  const BodyRates c = noslip_step(s, u, p, 0.1);
  const BodyRates d = noslip_step(s, u, p, 0.1);
  CHECK(c.velocity.x == d.velocity.x);
  CHECK(c.angular_velocity.z == d.angular_velocity.z);
}

TEST_CASE("learned_step with zero weights leaves rates unchanged") {
  VehicleParams p;
  TerrainPatch patch;
  patch.size = 3;
  patch.resolution = 1.0;
  patch.heights.assign(9, 0.0);
  MLPWeights w = init_weights(feature_dimension(3), {}, 1);
  for (auto& layer : w.layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
  }
  const VehicleState s = state_with({4, 0.5, 0}, {0, 0, 0.3});
  const BodyRates r = learned_step(s, {0.1, 4.0}, patch, w, p, 0.1);
  CHECK(r.velocity.x == 4.0);
  CHECK(r.velocity.y == 0.5);
  CHECK(r.angular_velocity.z == 0.3);
}

TEST_CASE("learned_step single-neuron pencil-and-paper forward pass") {
  VehicleParams p;
  TerrainPatch patch;
  patch.size = 1;
  patch.resolution = 1.0;
  patch.heights.assign(1, 0.0);
  const std::size_t dim = feature_dimension(1);  // 11

  // One tanh hidden unit, then a linear readout to output 0 (dV_x).
  MLPWeights w = init_weights(dim, {1}, 0);
  std::fill(w.layers[0].weights.begin(), w.layers[0].weights.end(), 0.0);
  w.layers[0].weights[0] = 0.3;  // reads V_x
  w.layers[0].biases[0] = 0.1;
  std::fill(w.layers[1].weights.begin(), w.layers[1].weights.end(), 0.0);
  w.layers[1].weights[0] = 2.0;  // hidden -> dV_x
  w.layers[1].biases[0] = -0.05;

  const VehicleState s = state_with({1.5, 0, 0}, {0, 0, 0});
  const BodyRates r = learned_step(s, {0.0, 1.5}, patch, w, p, 0.1);
  const double expected_delta = 2.0 * std::tanh(0.3 * 1.5 + 0.1) - 0.05;
  CHECK(r.velocity.x == doctest::Approx(1.5 + expected_delta).epsilon(1e-12));
}

TEST_CASE("learned_step rejects mismatched patch dimensions") {
  VehicleParams p;
  TerrainPatch patch;
  patch.size = 5;
  patch.resolution = 1.0;
  patch.heights.assign(25, 0.0);
  MLPWeights w = init_weights(feature_dimension(3), {4}, 2);
  const VehicleState s = state_with({4, 0, 0}, {0, 0, 0});
  CHECK_THROWS_AS(learned_step(s, {0.0, 4.0}, patch, w, p, 0.1), Error);
}
