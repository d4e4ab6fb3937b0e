// Aggressiveness machinery: dynamic-limit box constraints, extreme-value
// feature extraction phi(tau), per-feature Gaussian fitting, and the
// temperature-scaled free-energy score E(tau). Higher E means further from
// the fit dataset (more out-of-distribution, more aggressive).

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ovd/types.hpp"

namespace ovd {

/// Indices into the differentiated-state vector used for features:
///   0..2 = body acceleration (x, y, z), 3..5 = body angular velocity.
inline constexpr std::size_t kDiffStateDim = 6;

struct FeatureSelection {
  std::vector<std::size_t> components = {0, 1, 2};  // default: acceleration

  std::size_t feature_count() const { return 2 * components.size(); }
};

void validate(const FeatureSelection& sel);

/// Value of one differentiated-state component at one timestep.
double diff_state_component(const VehicleState& state, std::size_t component);

/// Componentwise box bounds on the selected differentiated-state entries.
struct DynamicLimits {
  FeatureSelection selection;
  std::vector<double> lower;  // per selected component
  std::vector<double> upper;
};

struct LimitViolation {
  std::size_t timestep = 0;
  std::size_t component = 0;  // differentiated-state index
  double value = 0.0;
  double bound = 0.0;
};

/// Per-feature Gaussian fit (mean, population variance) plus temperature.
/// Feature i's density is interpreted in log space when scoring.
struct EnergyModel {
  double temperature = 1.0;
  FeatureSelection selection;
  std::vector<double> mean;      // length feature_count()
  std::vector<double> variance;  // > 0
};

void validate(const EnergyModel& model);

/// phi(tau): ordered (max, min) pairs of each selected component over the
/// trajectory. Length 2 * d.
std::vector<double> features(const Trajectory& tau, const FeatureSelection& sel);

/// Fit per-feature Gaussians (sample mean, population variance over
/// trajectories). Throws DegenerateFeature when a feature is constant
/// across the dataset.
EnergyModel fit(const std::vector<Trajectory>& dataset,
                const FeatureSelection& sel, double temperature);

/// E(tau) = -T * logsumexp_i( logdensity_i(phi_i(tau)) / T ), computed with
/// a shifted log-sum-exp.
double energy(const EnergyModel& model, const Trajectory& tau);

/// All box-constraint violations, ordered by timestep then component.
/// Empty result means tau satisfies the limits.
std::vector<LimitViolation> check_limits(const Trajectory& tau,
                                         const DynamicLimits& limits);

/// Versioned text serialization; round-trips doubles exactly.
void save_energy_model(const EnergyModel& model, const std::string& path);
EnergyModel load_energy_model(const std::string& path);

}  // namespace ovd
