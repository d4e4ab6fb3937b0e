// Evaluation harness: horizon max normed error (H-MNE) per state group,
// per-model aggregation into a report table, and the cubic energy-vs-error
// trend fit.

#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "ovd/dataio.hpp"
#include "ovd/rollout.hpp"
#include "ovd/types.hpp"

namespace ovd {

enum class StateGroup {
  Acceleration,
  AngularVelocity,
  Velocity,
  Position,
  Roll,
  Pitch,
  Yaw,
};

inline constexpr std::array<StateGroup, 7> kAllGroups = {
    StateGroup::Acceleration, StateGroup::AngularVelocity,
    StateGroup::Velocity,     StateGroup::Position,
    StateGroup::Roll,         StateGroup::Pitch,
    StateGroup::Yaw,
};

std::string to_string(StateGroup group);
std::string group_units(StateGroup group);
StateGroup parse_state_group(const std::string& name);

/// Max over the horizon of the group's error norm: Euclidean norm for the
/// vector groups, wrapped absolute difference for the angle groups.
/// Throws LengthMismatch if the trajectories disagree in length or dt.
double hmne(const Trajectory& pred, const Trajectory& gt, StateGroup group);

struct CellStats {
  double mean = 0.0;
  double stddev = 0.0;  // population std over trajectories
};

struct ExcludedTrajectory {
  std::string model;
  std::string id;
  std::string reason;
};

struct BenchmarkReport {
  std::string dataset_id;
  std::size_t trajectory_count = 0;
  // cells[model][group]
  std::map<ModelKind, std::map<StateGroup, CellStats>> cells;
  // per-trajectory raw values, in dataset order: per_trajectory[model][i]
  std::map<ModelKind, std::vector<std::pair<std::string,
                                            std::map<StateGroup, double>>>>
      per_trajectory;
  std::vector<ExcludedTrajectory> excluded;
};

/// Roll every model over every trajectory and aggregate H-MNE per group.
/// Rollout failures are collected into the excluded list, never dropped
/// silently. jobs controls the rollout fan-out; aggregation order is fixed.
BenchmarkReport evaluate(const std::vector<ModelKind>& models,
                         const std::vector<DatasetEntry>& dataset,
                         const ElevationMap& map, const VehicleParams& params,
                         const MLPWeights* weights = nullptr,
                         const RolloutOptions& options = {}, int jobs = 1,
                         const std::string& dataset_id = "");

/// Degree-3 least-squares fit of error against energy, solved on a
/// centered/scaled abscissa and de-scaled back to raw coefficients
/// c0 + c1 E + c2 E^2 + c3 E^3.
struct TrendFit {
  std::array<double, 4> coefficients{};  // c0..c3
  double residual_norm = 0.0;            // sqrt of the RSS
  std::vector<std::pair<double, double>> points;  // (E, hmne) retained
};

/// Throws InsufficientPoints (< 4 points) or SingularFit (< 4 distinct E).
TrendFit trend(const std::vector<std::pair<double, double>>& points);
double trend_eval(const TrendFit& fit, double energy_value);

/// Fixed-width text table in Table-I column order, "mean ± std" cells.
std::string render_report_text(const BenchmarkReport& report);
/// Machine-readable CSV (one row per cell; excluded trajectories appended).
std::string render_report_csv(const BenchmarkReport& report);

/// Scatter file: one row per (model, trajectory) with the trajectory's
/// energy and per-group H-MNE. energies keyed by trajectory id.
std::string render_scatter(const BenchmarkReport& report,
                           const std::map<std::string, double>& energies);

struct ScatterRow {
  std::string id;
  ModelKind model = ModelKind::NoSlip3D;
  double energy = 0.0;
  std::map<StateGroup, double> hmne;
};
std::vector<ScatterRow> parse_scatter(const std::string& text);

}  // namespace ovd
