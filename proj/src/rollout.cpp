#include "ovd/rollout.hpp"

#include <cmath>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ovd/error.hpp"

namespace ovd {

namespace {

VehicleState advance_once(ModelKind kind, const VehicleState& state,
                          const ControlInput& u, const ElevationMap& map,
                          const VehicleParams& params,
                          const MLPWeights* weights, double dt,
                          std::uint32_t patch_size, const RateHook& hook,
                          std::size_t step_index) {
  VehicleState next;
  next.time = state.time + dt;

  if (kind == ModelKind::Learned) {
    if (weights == nullptr) {
      throw Error::data("ShapeMismatch",
                        "Learned model requires trained weights");
    }
    const EulerAngles att = euler_from_quat(state.orientation);
    const TerrainPatch patch =
        extract_patch(map, state.position.x, state.position.y, att.yaw,
                      patch_size, map.resolution);
    BodyRates rates = learned_step(state, u, patch, *weights, params, dt);
    if (hook) hook(step_index, rates);
    next.orientation =
        integrate_orientation(state.orientation, rates.angular_velocity, dt);
    next.position =
        state.position + rotate(next.orientation, rates.velocity) * dt;
    next.body_velocity = rates.velocity;
    next.body_angular_velocity = rates.angular_velocity;
    return next;
  }

  // Ground-contact analytic models: yaw from the model, roll/pitch and z
  // re-projected from the terrain under the new planar position.
  const EulerAngles att = euler_from_quat(state.orientation);
  BodyRates rates =
      kind == ModelKind::NoSlip3D
          ? noslip_step(state, u, params, dt)
          : slip_step(state, u, params, att, dt);
  if (hook) hook(step_index, rates);

  const Quat q_yawed = integrate_orientation(
      state.orientation, {0.0, 0.0, rates.angular_velocity.z}, dt);
  const double yaw_next = euler_from_quat(q_yawed).yaw;

  const Vec3 disp = rotate(q_yawed, rates.velocity) * dt;
  const double x_next = state.position.x + disp.x;
  const double y_next = state.position.y + disp.y;

  const ProjectedPose pose = project_pose(map, x_next, y_next, yaw_next, params);
  next.position = pose.position;
  next.orientation = pose.orientation;
  next.body_velocity = rates.velocity;

  // Roll/pitch rates come from the terrain re-projection, yaw rate from the
  // model.
  const Vec3 dlog =
      quat_log(state.orientation.conjugate() * next.orientation) / dt;
  next.body_angular_velocity = {dlog.x, dlog.y, rates.angular_velocity.z};
  return next;
}

}  // namespace

VehicleState advance_state(ModelKind kind, const VehicleState& state,
                           const ControlInput& u, const ElevationMap& map,
                           const VehicleParams& params,
                           const MLPWeights* weights, double dt,
                           const RolloutOptions& options, const RateHook& hook,
                           std::size_t step_index) {
  const int n = options.substeps < 1 ? 1 : options.substeps;
  if (n == 1) {
    return advance_once(kind, state, u, map, params, weights, dt,
                        options.patch_size, hook, step_index);
  }
  VehicleState s = state;
  const double dt_sub = dt / n;
  for (int k = 0; k < n; ++k) {
    s = advance_once(kind, s, u, map, params, weights, dt_sub,
                     options.patch_size, hook, step_index);
  }
  s.time = state.time + dt;  // avoid accumulated substep rounding
  return s;
}

RolloutResult rollout(ModelKind kind, const Trajectory& gt,
                      const ElevationMap& map, const VehicleParams& params,
                      const MLPWeights* weights, const RolloutOptions& options,
                      const std::string& source_id) {
  if (gt.states.size() < 2) {
    throw Error::data("EmptyTrajectory",
                      "ground truth needs at least 2 states");
  }
  if (gt.controls.size() != gt.states.size()) {
    throw Error::data("ShapeMismatch", "controls/states length mismatch");
  }
  if (kind == ModelKind::Learned && weights == nullptr) {
    throw Error::data("ShapeMismatch",
                      "Learned model requires trained weights");
  }

  RolloutResult out;
  out.model = kind;
  out.source_id = source_id;
  out.predicted.dt = gt.dt;
  out.predicted.controls = gt.controls;
  out.predicted.states.reserve(gt.states.size());
  out.predicted.states.push_back(gt.states.front());
  for (std::size_t t = 0; t + 1 < gt.states.size(); ++t) {
    out.predicted.states.push_back(
        advance_state(kind, out.predicted.states.back(), gt.controls[t], map,
                      params, weights, gt.dt, options, nullptr, t));
  }
  finalize_accelerations(out.predicted.states, gt.dt, params.gravity);
  // The initialization contract: state 0 stays bitwise the ground truth
  // initial state, including its stored acceleration.
  out.predicted.states.front() = gt.states.front();
  return out;
}

BatchResult rollout_batch_serial(ModelKind kind,
                                 const std::vector<DatasetEntry>& dataset,
                                 const ElevationMap& map,
                                 const VehicleParams& params,
                                 const MLPWeights* weights,
                                 const RolloutOptions& options) {
  BatchResult out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    try {
      out.results.push_back(rollout(kind, dataset[i].trajectory, map, params,
                                    weights, options, dataset[i].id));
    } catch (const Error& e) {
      out.failures.push_back({i, dataset[i].id, e.what()});
    }
  }
  return out;
}

BatchResult rollout_batch(ModelKind kind,
                          const std::vector<DatasetEntry>& dataset,
                          const ElevationMap& map, const VehicleParams& params,
                          const MLPWeights* weights,
                          const RolloutOptions& options, int jobs) {
#ifdef _OPENMP
  if (jobs != 1 && dataset.size() > 1) {
    const int threads = jobs <= 0 ? omp_get_max_threads() : jobs;
    const auto n = static_cast<std::int64_t>(dataset.size());
    std::vector<std::optional<RolloutResult>> slots(dataset.size());
    std::vector<std::optional<BatchFailure>> fails(dataset.size());

#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      try {
        slots[idx] = rollout(kind, dataset[idx].trajectory, map, params,
                             weights, options, dataset[idx].id);
      } catch (const Error& e) {
        fails[idx] = BatchFailure{idx, dataset[idx].id, e.what()};
      }
    }

    // Gather in input order for bitwise-stable output.
    BatchResult out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (slots[i]) out.results.push_back(std::move(*slots[i]));
      if (fails[i]) out.failures.push_back(std::move(*fails[i]));
    }
    return out;
  }
#else
  (void)jobs;
#endif
  return rollout_batch_serial(kind, dataset, map, params, weights, options);
}

}  // namespace ovd
