#include "ovd/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "ovd/error.hpp"
#include "ovd/rng.hpp"

namespace ovd {

namespace {

namespace fs = std::filesystem;

double mix(double a, double b, double f) { return a + (b - a) * f; }

Vec3 mix_vec(const Vec3& a, const Vec3& b, double f) {
  return {mix(a.x, b.x, f), mix(a.y, b.y, f), mix(a.z, b.z, f)};
}

Quat mix_quat(const Quat& a, const Quat& b_in, double f) {
  // Hemisphere alignment is the quaternion analog of angle unwrapping.
  Quat b = b_in;
  if (a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z < 0.0) {
    b = {-b.w, -b.x, -b.y, -b.z};
  }
  return normalized(Quat{mix(a.w, b.w, f), mix(a.x, b.x, f), mix(a.y, b.y, f),
                         mix(a.z, b.z, f)});
}

template <typename T>
void check_channel(const LogChannel<T>& ch, const char* name, double max_gap) {
  if (ch.times.size() != ch.values.size()) {
    throw Error::data("ShapeMismatch",
                      std::string(name) + " channel times/values mismatch");
  }
  if (ch.times.size() < 2) {
    throw Error::data("InsufficientCoverage",
                      std::string(name) + " channel needs >= 2 samples");
  }
  for (std::size_t i = 0; i + 1 < ch.times.size(); ++i) {
    if (ch.times[i + 1] < ch.times[i]) {
      throw Error::data("ConfigInvalid",
                        std::string(name) + " channel times decrease");
    }
    if (ch.times[i + 1] - ch.times[i] > max_gap) {
      throw Error::data("InsufficientCoverage",
                        std::string(name) + " channel has a gap > 3/rate");
    }
  }
}

template <typename T, typename Lerp>
T sample_channel(const LogChannel<T>& ch, double t, const Lerp& mix) {
  // Exact sample hits return the stored value (resampling an
  // already-uniform log is the identity).
  auto it = std::lower_bound(ch.times.begin(), ch.times.end(), t);
  if (it != ch.times.end() && *it == t) {
    return ch.values[static_cast<std::size_t>(it - ch.times.begin())];
  }
  if (it == ch.times.begin() || it == ch.times.end()) {
    throw Error::data("InsufficientCoverage",
                      "resample time outside channel span");
  }
  const auto hi = static_cast<std::size_t>(it - ch.times.begin());
  const std::size_t lo = hi - 1;
  const double span = ch.times[hi] - ch.times[lo];
  const double f = span > 0.0 ? (t - ch.times[lo]) / span : 0.0;
  return mix(ch.values[lo], ch.values[hi], f);
}

}  // namespace

Trajectory resample(const RawLog& log, double rate_hz) {
  if (!(rate_hz > 0.0)) {
    throw Error::data("ConfigInvalid", "resample rate must be positive");
  }
  const double max_gap = 3.0 / rate_hz;
  check_channel(log.position, "position", max_gap);
  check_channel(log.orientation, "orientation", max_gap);
  check_channel(log.body_velocity, "body_velocity", max_gap);
  check_channel(log.body_angular_velocity, "body_angular_velocity", max_gap);
  check_channel(log.body_acceleration, "body_acceleration", max_gap);
  check_channel(log.steering, "steering", max_gap);
  check_channel(log.wheel_speed, "wheel_speed", max_gap);

  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  auto widen = [&](const std::vector<double>& times) {
    t0 = std::max(t0, times.front());
    t1 = std::min(t1, times.back());
  };
  widen(log.position.times);
  widen(log.orientation.times);
  widen(log.body_velocity.times);
  widen(log.body_angular_velocity.times);
  widen(log.body_acceleration.times);
  widen(log.steering.times);
  widen(log.wheel_speed.times);

  const double dt = 1.0 / rate_hz;
  Trajectory out;
  out.dt = dt;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    if (t > t1 + 1e-12) break;
    VehicleState s;
    s.time = t;
    s.position = sample_channel(log.position, t, mix_vec);
    s.orientation = sample_channel(log.orientation, t, mix_quat);
    s.body_velocity = sample_channel(log.body_velocity, t, mix_vec);
    s.body_angular_velocity =
        sample_channel(log.body_angular_velocity, t, mix_vec);
    s.body_acceleration = sample_channel(log.body_acceleration, t, mix_vec);
    out.states.push_back(s);
    ControlInput u;
    u.steering = sample_channel(log.steering, t, mix);
    u.wheel_speed = sample_channel(log.wheel_speed, t, mix);
    out.controls.push_back(u);
  }
  if (out.states.size() < 2) {
    throw Error::data("InsufficientCoverage",
                      "channels share less than two grid points");
  }
  return out;
}

std::vector<Trajectory> chunk(const Trajectory& trajectory, double horizon_s) {
  if (!(horizon_s > 0.0)) {
    throw Error::data("ConfigInvalid", "horizon must be positive");
  }
  const double steps_exact = horizon_s / trajectory.dt;
  const auto steps = static_cast<std::size_t>(std::llround(steps_exact));
  if (steps < 1 || std::abs(steps_exact - static_cast<double>(steps)) > 1e-9) {
    throw Error::data("ConfigInvalid", "horizon must be a multiple of dt");
  }
  std::vector<Trajectory> out;
  // Window i covers states [i*steps, i*steps + steps]; windows share their
  // boundary state so each dt interval is covered exactly once.
  for (std::size_t start = 0;
       start + steps < trajectory.states.size(); start += steps) {
    Trajectory w;
    w.dt = trajectory.dt;
    w.states.assign(trajectory.states.begin() + static_cast<std::ptrdiff_t>(start),
                    trajectory.states.begin() +
                        static_cast<std::ptrdiff_t>(start + steps + 1));
    w.controls.assign(
        trajectory.controls.begin() + static_cast<std::ptrdiff_t>(start),
        trajectory.controls.begin() +
            static_cast<std::ptrdiff_t>(start + steps + 1));
    out.push_back(std::move(w));
  }
  return out;
}

void validate(const DatasetManifest& manifest) {
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) {
    if (!ids.insert(e.id).second) {
      throw Error::data("ConfigInvalid",
                        "duplicate trajectory id in manifest: " + e.id);
    }
    if (e.split != "train" && e.split != "val" && e.split != "test") {
      throw Error::data("ConfigInvalid",
                        "manifest split must be train/val/test, got " +
                            e.split);
    }
  }
}

DatasetManifest split(const DatasetManifest& manifest,
                      const SplitFractions& fractions, std::uint64_t seed) {
  if (fractions.train < 0.0 || fractions.val < 0.0 || fractions.test < 0.0) {
    throw Error::data("ConfigInvalid", "split fractions must be >= 0");
  }
  const double sum = fractions.train + fractions.val + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error::data("ConfigInvalid", "split fractions must sum to 1");
  }
  DatasetManifest out = manifest;
  for (auto& e : out.entries) {
    const double u =
        static_cast<double>(stable_hash(e.id, seed) >> 11) * 0x1.0p-53;
    if (u < fractions.train) {
      e.split = "train";
    } else if (u < fractions.train + fractions.val) {
      e.split = "val";
    } else {
      e.split = "test";
    }
  }
  validate(out);
  return out;
}

void validate(const SyntheticConfig& config) {
  if (!(config.map_size > 0.0) || !(config.map_resolution > 0.0)) {
    throw Error::data("ConfigInvalid", "map size/resolution must be positive");
  }
  if (!(config.speed_min > 0.0) || config.speed_max < config.speed_min) {
    throw Error::data("ConfigInvalid", "speed range invalid");
  }
  if (config.roughness < 0.0) {
    throw Error::data("ConfigInvalid", "roughness must be >= 0");
  }
  if (config.trajectory_count < 1) {
    throw Error::data("ConfigInvalid", "trajectory count must be >= 1");
  }
  if (!(config.horizon_s > 0.0) || !(config.dt > 0.0)) {
    throw Error::data("ConfigInvalid", "horizon and dt must be positive");
  }
  if (config.noise < 0.0 || config.mismatch < 0.0) {
    throw Error::data("ConfigInvalid", "noise/mismatch must be >= 0");
  }
  if (config.steer_amplitude < 0.0 ||
      !(config.steer_period_min > 0.0) ||
      config.steer_period_max < config.steer_period_min) {
    throw Error::data("ConfigInvalid", "steering script config invalid");
  }
  const double margin =
      config.horizon_s * config.speed_max * 1.25 + 12.0;
  if (config.map_size * 0.5 - margin < 5.0) {
    throw Error::data("ConfigInvalid",
                      "map too small for the requested speeds and horizon");
  }
}

VehicleParams generator_params(const VehicleParams& params,
                               const SyntheticConfig& config) {
  VehicleParams p = params;
  const double m = config.mismatch;
  p.friction *= 1.0 - 0.15 * m;
  p.drive_gain *= 1.0 + 0.20 * m;
  p.tire_stiffness *= 1.0 - 0.20 * m;
  return p;
}

namespace {

ElevationMap make_terrain(Rng& rng, const SyntheticConfig& config) {
  ElevationMap map;
  map.resolution = config.map_resolution;
  const auto cells =
      static_cast<std::uint32_t>(std::lround(config.map_size / config.map_resolution));
  map.width = cells;
  map.height = cells;
  map.origin_x = -0.5 * config.map_size;
  map.origin_y = -0.5 * config.map_size;
  map.heights.assign(static_cast<std::size_t>(cells) * cells, 0.0f);
  if (config.roughness <= 0.0) return map;

  const double area = config.map_size * config.map_size;
  const auto bumps = static_cast<std::size_t>(
      std::max(1.0, area / (config.bump_spacing * config.bump_spacing)));
  for (std::size_t b = 0; b < bumps; ++b) {
    const double cx = rng.uniform(map.origin_x, map.origin_x + config.map_size);
    const double cy = rng.uniform(map.origin_y, map.origin_y + config.map_size);
    const double amp = config.roughness * rng.uniform(-1.0, 1.0);
    const double sigma = config.bump_spacing * rng.uniform(0.35, 0.7);

    // Each bump only touches cells within 3 sigma.
    const double reach = 3.0 * sigma;
    const auto col_lo = static_cast<std::int64_t>(
        std::floor((cx - reach - map.origin_x) / map.resolution));
    const auto col_hi = static_cast<std::int64_t>(
        std::ceil((cx + reach - map.origin_x) / map.resolution));
    const auto row_lo = static_cast<std::int64_t>(
        std::floor((cy - reach - map.origin_y) / map.resolution));
    const auto row_hi = static_cast<std::int64_t>(
        std::ceil((cy + reach - map.origin_y) / map.resolution));
    for (std::int64_t row = std::max<std::int64_t>(0, row_lo);
         row <= std::min<std::int64_t>(cells - 1, row_hi); ++row) {
      const double y = map.origin_y + static_cast<double>(row) * map.resolution;
      for (std::int64_t col = std::max<std::int64_t>(0, col_lo);
           col <= std::min<std::int64_t>(cells - 1, col_hi); ++col) {
        const double x =
            map.origin_x + static_cast<double>(col) * map.resolution;
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        map.heights[static_cast<std::size_t>(row) * cells +
                    static_cast<std::size_t>(col)] +=
            static_cast<float>(amp * std::exp(-d2 / (2.0 * sigma * sigma)));
      }
    }
  }
  return map;
}

}  // namespace

SyntheticDataset generate_synthetic(std::uint64_t seed,
                                    const SyntheticConfig& config,
                                    const VehicleParams& params) {
  validate(config);
  validate(params);
  Rng rng(seed);

  SyntheticDataset out;
  out.map = make_terrain(rng, config);
  const VehicleParams gen_params = generator_params(params, config);

  const auto steps =
      static_cast<std::size_t>(std::llround(config.horizon_s / config.dt));
  const double margin = config.horizon_s * config.speed_max * 1.25 + 12.0;
  const double reach = 0.5 * config.map_size - margin;

  const RolloutOptions options;  // analytic generator: patch size unused
  for (int i = 0; i < config.trajectory_count; ++i) {
    Trajectory traj;
    traj.dt = config.dt;
    bool done = false;
    for (int attempt = 0; attempt < 64 && !done; ++attempt) {
      const double x0 = rng.uniform(-reach, reach);
      const double y0 = rng.uniform(-reach, reach);
      const double yaw0 = rng.uniform(-kPi, kPi);
      const double speed = rng.uniform(config.speed_min, config.speed_max);
      double amp = 0.0, period = 1.0, phase = 0.0;
      if (config.steering == SteeringScript::Sine) {
        amp = config.steer_amplitude * rng.uniform(0.7, 1.0);
        amp = std::min(amp, params.steering_limit);
        period = rng.uniform(config.steer_period_min, config.steer_period_max);
        phase = rng.uniform(0.0, 2.0 * kPi);
      }

      traj.states.clear();
      traj.controls.clear();
      try {
        const ProjectedPose pose = project_pose(out.map, x0, y0, yaw0, params);
        VehicleState s;
        s.time = 0.0;
        s.position = pose.position;
        s.orientation = pose.orientation;
        s.body_velocity = {speed, 0.0, 0.0};
        s.body_angular_velocity = {0.0, 0.0, 0.0};
        traj.states.push_back(s);
        for (std::size_t t = 0; t <= steps; ++t) {
          ControlInput u;
          u.wheel_speed = speed;
          u.steering =
              amp * std::sin(2.0 * kPi * (static_cast<double>(t) * config.dt) /
                                 period +
                             phase);
          traj.controls.push_back(u);
          if (t == steps) break;
          RateHook hook = nullptr;
          if (config.noise > 0.0) {
            hook = [&](std::size_t, BodyRates& rates) {
              rates.velocity.x += config.noise * 0.03 * rng.normal();
              rates.velocity.y += config.noise * 0.02 * rng.normal();
              rates.angular_velocity.z += config.noise * 0.01 * rng.normal();
            };
          }
          traj.states.push_back(advance_state(ModelKind::Slip3D,
                                              traj.states.back(), u, out.map,
                                              gen_params, nullptr, config.dt,
                                              options, hook, t));
        }
        done = true;
      } catch (const Error&) {
        // Start drew an unlucky spot; retry with fresh draws.
      }
    }
    if (!done) {
      throw Error::data("ConfigInvalid",
                        "could not place trajectory inside the map");
    }
    finalize_accelerations(traj.states, config.dt, params.gravity);

    std::ostringstream id;
    id << "traj_" << std::setw(4) << std::setfill('0') << i;
    out.entries.push_back({id.str(), std::move(traj)});
  }

  out.manifest.dataset_id = "synthetic-" + std::to_string(seed);
  out.manifest.map_path = "map.bin";
  out.manifest.horizon_s = config.horizon_s;
  out.manifest.seed = seed;
  for (const auto& e : out.entries) {
    out.manifest.entries.push_back({e.id, e.id + ".txt", "train"});
  }
  out.manifest = split(out.manifest, config.fractions, seed);
  return out;
}

namespace {

constexpr char kTrajectoryHeader[] = "ovd-trajectory v1";
constexpr char kManifestHeader[] = "ovd-manifest v1";

}  // namespace

void save_trajectory(const Trajectory& trajectory, const std::string& path) {
  validate(trajectory);
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << kTrajectoryHeader << '\n';
  out << "dt " << trajectory.dt << '\n';
  out << "count " << trajectory.states.size() << '\n';
  out << "# time px py pz qw qx qy qz vx vy vz wx wy wz ax ay az "
         "steering wheel_speed\n";
  for (std::size_t i = 0; i < trajectory.states.size(); ++i) {
    const auto& s = trajectory.states[i];
    const auto& u = trajectory.controls[i];
    out << s.time << ' ' << s.position.x << ' ' << s.position.y << ' '
        << s.position.z << ' ' << s.orientation.w << ' ' << s.orientation.x
        << ' ' << s.orientation.y << ' ' << s.orientation.z << ' '
        << s.body_velocity.x << ' ' << s.body_velocity.y << ' '
        << s.body_velocity.z << ' ' << s.body_angular_velocity.x << ' '
        << s.body_angular_velocity.y << ' ' << s.body_angular_velocity.z
        << ' ' << s.body_acceleration.x << ' ' << s.body_acceleration.y << ' '
        << s.body_acceleration.z << ' ' << u.steering << ' ' << u.wheel_speed
        << '\n';
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw Error::data("ParseError", "cannot write " + tmp);
    f << out.str();
  }
  fs::rename(tmp, path);
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::data("ParseError", "cannot open trajectory " + path);
  std::string header;
  std::getline(in, header);
  if (header != kTrajectoryHeader) {
    throw Error::data("ParseError", path + ": not a trajectory file");
  }
  Trajectory traj;
  std::string key;
  std::size_t count = 0;
  if (!(in >> key >> traj.dt) || key != "dt") {
    throw Error::data("ParseError", path + ": bad dt line");
  }
  if (!(in >> key >> count) || key != "count") {
    throw Error::data("ParseError", path + ": bad count line");
  }
  std::string line;
  std::getline(in, line);  // end of count line
  std::getline(in, line);  // column comment
  traj.states.reserve(count);
  traj.controls.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    VehicleState s;
    ControlInput u;
    if (!(in >> s.time >> s.position.x >> s.position.y >> s.position.z >>
          s.orientation.w >> s.orientation.x >> s.orientation.y >>
          s.orientation.z >> s.body_velocity.x >> s.body_velocity.y >>
          s.body_velocity.z >> s.body_angular_velocity.x >>
          s.body_angular_velocity.y >> s.body_angular_velocity.z >>
          s.body_acceleration.x >> s.body_acceleration.y >>
          s.body_acceleration.z >> u.steering >> u.wheel_speed)) {
      throw Error::data("ParseError",
                        path + ": truncated at record " + std::to_string(i));
    }
    traj.states.push_back(s);
    traj.controls.push_back(u);
  }
  validate(traj);
  return traj;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  validate(manifest);
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << kManifestHeader << '\n';
  out << "dataset " << manifest.dataset_id << '\n';
  out << "map " << manifest.map_path << '\n';
  out << "horizon_s " << manifest.horizon_s << '\n';
  out << "seed " << manifest.seed << '\n';
  out << "count " << manifest.entries.size() << '\n';
  for (const auto& e : manifest.entries) {
    out << e.id << ' ' << e.path << ' ' << e.split << '\n';
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw Error::data("ParseError", "cannot write " + tmp);
    f << out.str();
  }
  fs::rename(tmp, path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::data("ParseError", "cannot open manifest " + path);
  std::string header;
  std::getline(in, header);
  if (header != kManifestHeader) {
    throw Error::data("ParseError", path + ": not a manifest file");
  }
  DatasetManifest m;
  std::string key;
  std::size_t count = 0;
  if (!(in >> key >> m.dataset_id) || key != "dataset") {
    throw Error::data("ParseError", path + ": bad dataset line");
  }
  if (!(in >> key >> m.map_path) || key != "map") {
    throw Error::data("ParseError", path + ": bad map line");
  }
  if (!(in >> key >> m.horizon_s) || key != "horizon_s") {
    throw Error::data("ParseError", path + ": bad horizon line");
  }
  if (!(in >> key >> m.seed) || key != "seed") {
    throw Error::data("ParseError", path + ": bad seed line");
  }
  if (!(in >> key >> count) || key != "count") {
    throw Error::data("ParseError", path + ": bad count line");
  }
  for (std::size_t i = 0; i < count; ++i) {
    ManifestEntry e;
    if (!(in >> e.id >> e.path >> e.split)) {
      throw Error::data("ParseError", path + ": truncated entry list");
    }
    m.entries.push_back(std::move(e));
  }
  validate(m);
  return m;
}

LoadedDataset load_dataset(const std::string& manifest_path) {
  LoadedDataset out;
  out.manifest = load_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  out.map = load_map((base / out.manifest.map_path).string());
  out.entries.reserve(out.manifest.entries.size());
  for (const auto& e : out.manifest.entries) {
    out.entries.push_back(
        {e.id, load_trajectory((base / e.path).string())});
  }
  return out;
}

std::vector<DatasetEntry> filter_split(const LoadedDataset& dataset,
                                       const std::string& split) {
  std::vector<DatasetEntry> out;
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    if (split.empty() || dataset.manifest.entries[i].split == split) {
      out.push_back(dataset.entries[i]);
    }
  }
  return out;
}

void save_dataset(const SyntheticDataset& dataset, const std::string& dir,
                  const std::string& manifest_name) {
  fs::create_directories(dir);
  const fs::path base(dir);
  save_map(dataset.map, (base / dataset.manifest.map_path).string());
  for (std::size_t i = 0; i < dataset.entries.size(); ++i) {
    save_trajectory(dataset.entries[i].trajectory,
                    (base / dataset.manifest.entries[i].path).string());
  }
  save_manifest(dataset.manifest, (base / manifest_name).string());
}

}  // namespace ovd
