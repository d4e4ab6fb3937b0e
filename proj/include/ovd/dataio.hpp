// Trajectory/map/manifest file formats, 10 Hz resampling of raw logs,
// horizon chunking, hash-stable dataset splits, and the seeded synthetic
// terrain + driving generator that stands in for field datasets.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ovd/elevation_map.hpp"
#include "ovd/rollout.hpp"
#include "ovd/types.hpp"

namespace ovd {

/// One irregularly-sampled channel of a raw log.
template <typename T>
struct LogChannel {
  std::vector<double> times;
  std::vector<T> values;

  std::size_t size() const { return times.size(); }
};

/// Raw driving log with per-channel timestamps (times non-decreasing).
struct RawLog {
  LogChannel<Vec3> position;
  LogChannel<Quat> orientation;
  LogChannel<Vec3> body_velocity;
  LogChannel<Vec3> body_angular_velocity;
  LogChannel<Vec3> body_acceleration;
  LogChannel<double> steering;
  LogChannel<double> wheel_speed;
};

/// Linear (quaternions: hemisphere-aligned componentwise, renormalized)
/// interpolation of every channel onto a uniform grid at the given rate,
/// over the window covered by all channels. Throws InsufficientCoverage if
/// any channel has a gap wider than 3/rate or the common window is shorter
/// than two samples.
Trajectory resample(const RawLog& log, double rate_hz);

/// Non-overlapping consecutive horizon windows (each horizon_s/dt steps,
/// sharing boundary states); the trailing remainder is dropped.
std::vector<Trajectory> chunk(const Trajectory& trajectory, double horizon_s);

struct ManifestEntry {
  std::string id;
  std::string path;   // trajectory file, relative to the manifest
  std::string split;  // train | val | test
};

struct DatasetManifest {
  std::string dataset_id;
  std::string map_path;  // relative to the manifest
  double horizon_s = 4.0;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
};

void validate(const DatasetManifest& manifest);

struct SplitFractions {
  double train = 1.0;
  double val = 0.0;
  double test = 0.0;
};

/// Reassign splits by seeded stable hash of each trajectory id. Adding new
/// trajectories never changes existing assignments.
DatasetManifest split(const DatasetManifest& manifest,
                      const SplitFractions& fractions, std::uint64_t seed);

enum class SteeringScript { Straight, Sine };

struct SyntheticConfig {
  double map_size = 260.0;       // m, square side
  double map_resolution = 0.5;   // m/cell
  double roughness = 0.4;        // bump amplitude, m (0 = flat)
  double bump_spacing = 14.0;    // characteristic bump spacing, m
  double speed_min = 6.5;        // m/s
  double speed_max = 9.5;
  SteeringScript steering = SteeringScript::Sine;
  double steer_amplitude = 0.25;  // rad
  double steer_period_min = 2.5;  // s
  double steer_period_max = 5.0;
  int trajectory_count = 64;
  double horizon_s = 4.0;
  double dt = 0.1;
  double noise = 1.0;     // process-noise scale; 0 disables
  double mismatch = 1.0;  // scale of the generator-vs-nominal param offset
  SplitFractions fractions{0.7, 0.15, 0.15};
};

void validate(const SyntheticConfig& config);

/// Generator-side vehicle params: the nominal set perturbed by the
/// mismatch scale (lower grip, stronger drive). mismatch 0 returns params
/// unchanged, which makes a Slip3D rollout reproduce the data exactly.
VehicleParams generator_params(const VehicleParams& params,
                               const SyntheticConfig& config);

struct SyntheticDataset {
  ElevationMap map;
  std::vector<DatasetEntry> entries;  // order matches manifest
  DatasetManifest manifest;           // paths filled relative to an out dir
};

/// Deterministic per seed. Ground truth is a Slip3D rollout under the
/// generator params plus seeded per-step process noise.
SyntheticDataset generate_synthetic(std::uint64_t seed,
                                    const SyntheticConfig& config,
                                    const VehicleParams& params);

/// Line-delimited decimal text, one state+control per line; round-trips
/// doubles exactly.
void save_trajectory(const Trajectory& trajectory, const std::string& path);
Trajectory load_trajectory(const std::string& path);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

struct LoadedDataset {
  ElevationMap map;
  DatasetManifest manifest;
  std::vector<DatasetEntry> entries;  // all trajectories, manifest order
};

/// Load a manifest plus its map and trajectories (paths resolved relative
/// to the manifest file).
LoadedDataset load_dataset(const std::string& manifest_path);

/// Entries whose manifest split matches (empty filter = all).
std::vector<DatasetEntry> filter_split(const LoadedDataset& dataset,
                                       const std::string& split);

/// Write map, trajectories, and manifest under a directory.
void save_dataset(const SyntheticDataset& dataset, const std::string& dir,
                  const std::string& manifest_name = "manifest.txt");

}  // namespace ovd
