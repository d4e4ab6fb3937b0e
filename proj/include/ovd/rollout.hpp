// Open-loop forward integration of a dynamics model from a ground-truth
// initial state, replaying recorded controls. Ground-contact models are
// re-projected onto the terrain each step; the learned model integrates its
// own predicted rates and reads terrain only through the patch.
//
// rollout_batch fans out across trajectories with OpenMP when jobs != 1;
// rollout_batch_serial is the plain-loop reference the tests compare against.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ovd/elevation_map.hpp"
#include "ovd/mlp.hpp"
#include "ovd/models.hpp"
#include "ovd/types.hpp"

namespace ovd {

/// A named trajectory as it appears in dataset manifests.
struct DatasetEntry {
  std::string id;
  Trajectory trajectory;
};

struct RolloutOptions {
  std::uint32_t patch_size = 16;  // Learned-model terrain patch, cells
  int substeps = 1;               // model integration substeps per dt
};

struct RolloutResult {
  Trajectory predicted;
  ModelKind model = ModelKind::NoSlip3D;
  std::string source_id;
};

/// Hook applied to the model rates before integration; the synthetic
/// generator injects process noise here. Arguments: step index, rates.
using RateHook = std::function<void(std::size_t, BodyRates&)>;

/// Advance one state by dt (substeps sub-intervals, controls held). This is
/// the single stepping path shared by rollout and the data generator.
VehicleState advance_state(ModelKind kind, const VehicleState& state,
                           const ControlInput& u, const ElevationMap& map,
                           const VehicleParams& params,
                           const MLPWeights* weights, double dt,
                           const RolloutOptions& options,
                           const RateHook& hook = nullptr,
                           std::size_t step_index = 0);

/// Roll a model over gt's horizon. predicted state 0 is bitwise the ground
/// truth initial state; controls are replayed open-loop. Throws OutOfBounds
/// if the vehicle leaves the map, ShapeMismatch for Learned without weights.
RolloutResult rollout(ModelKind kind, const Trajectory& gt,
                      const ElevationMap& map, const VehicleParams& params,
                      const MLPWeights* weights = nullptr,
                      const RolloutOptions& options = {},
                      const std::string& source_id = "");

struct BatchFailure {
  std::size_t index = 0;
  std::string id;
  std::string message;
};

/// Successes in input order plus per-trajectory failures (never fail-fast).
struct BatchResult {
  std::vector<RolloutResult> results;
  std::vector<BatchFailure> failures;
};

/// Serial reference implementation.
BatchResult rollout_batch_serial(ModelKind kind,
                                 const std::vector<DatasetEntry>& dataset,
                                 const ElevationMap& map,
                                 const VehicleParams& params,
                                 const MLPWeights* weights = nullptr,
                                 const RolloutOptions& options = {});

/// OpenMP fan-out across trajectories; results gathered in input order and
/// bitwise identical to the serial path. jobs <= 0 means all hardware
/// threads, jobs == 1 falls through to the serial loop.
BatchResult rollout_batch(ModelKind kind,
                          const std::vector<DatasetEntry>& dataset,
                          const ElevationMap& map, const VehicleParams& params,
                          const MLPWeights* weights = nullptr,
                          const RolloutOptions& options = {}, int jobs = 1);

}  // namespace ovd
