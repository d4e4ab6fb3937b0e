#include "ovd/energy.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "ovd/error.hpp"

namespace ovd {

void validate(const FeatureSelection& sel) {
  if (sel.components.empty()) {
    throw Error::data("ConfigInvalid", "feature selection must be nonempty");
  }
  std::set<std::size_t> seen;
  for (std::size_t c : sel.components) {
    if (c >= kDiffStateDim) {
      throw Error::data("ConfigInvalid",
                        "feature component index out of range: " +
                            std::to_string(c));
    }
    if (!seen.insert(c).second) {
      throw Error::data("ConfigInvalid", "duplicate feature component index");
    }
  }
}

double diff_state_component(const VehicleState& state, std::size_t component) {
  switch (component) {
    case 0:
      return state.body_acceleration.x;
    case 1:
      return state.body_acceleration.y;
    case 2:
      return state.body_acceleration.z;
    case 3:
      return state.body_angular_velocity.x;
    case 4:
      return state.body_angular_velocity.y;
    case 5:
      return state.body_angular_velocity.z;
    default:
      throw Error::data("ConfigInvalid", "differentiated-state index > 5");
  }
}

void validate(const EnergyModel& model) {
  validate(model.selection);
  if (!(model.temperature > 0.0)) {
    throw Error::data("ConfigInvalid", "temperature must be positive");
  }
  const std::size_t k = model.selection.feature_count();
  if (model.mean.size() != k || model.variance.size() != k) {
    throw Error::data("ShapeMismatch",
                      "energy model moment vectors must have length 2d");
  }
  for (double v : model.variance) {
    if (!(v > 0.0)) {
      throw Error::data("DegenerateFeature",
                        "energy model variance must be positive");
    }
  }
}

std::vector<double> features(const Trajectory& tau,
                             const FeatureSelection& sel) {
  validate(sel);
  if (tau.states.size() < 2) {
    throw Error::data("EmptyTrajectory",
                      "feature extraction needs at least 2 states");
  }
  std::vector<double> phi;
  phi.reserve(sel.feature_count());
  for (std::size_t c : sel.components) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : tau.states) {
      const double v = diff_state_component(s, c);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    phi.push_back(hi);
    phi.push_back(lo);
  }
  return phi;
}

EnergyModel fit(const std::vector<Trajectory>& dataset,
                const FeatureSelection& sel, double temperature) {
  validate(sel);
  if (dataset.size() < 2) {
    throw Error::data("EmptyDataset",
                      "energy fit needs at least 2 trajectories");
  }
  if (!(temperature > 0.0)) {
    throw Error::data("ConfigInvalid", "temperature must be positive");
  }
  const std::size_t k = sel.feature_count();
  std::vector<std::vector<double>> rows;
  rows.reserve(dataset.size());
  for (const auto& tau : dataset) rows.push_back(features(tau, sel));

  EnergyModel model;
  model.temperature = temperature;
  model.selection = sel;
  model.mean.assign(k, 0.0);
  model.variance.assign(k, 0.0);
  const double n = static_cast<double>(rows.size());
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < k; ++i) model.mean[i] += row[i];
  }
  for (std::size_t i = 0; i < k; ++i) model.mean[i] /= n;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < k; ++i) {
      const double d = row[i] - model.mean[i];
      model.variance[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    model.variance[i] /= n;  // population variance over trajectories
    if (model.variance[i] < 1e-12) {
      throw Error::numerical("DegenerateFeature",
                             "feature " + std::to_string(i) +
                                 " is constant across the dataset");
    }
  }
  return model;
}

double energy(const EnergyModel& model, const Trajectory& tau) {
  validate(model);
  const std::vector<double> phi = features(tau, model.selection);
  const double t = model.temperature;

  // Scaled per-feature Gaussian log densities.
  std::vector<double> terms(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double var = model.variance[i];
    const double d = phi[i] - model.mean[i];
    const double log_density =
        -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
    terms[i] = log_density / t;
  }
  const double shift = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double v : terms) sum += std::exp(v - shift);
  return -t * (shift + std::log(sum));
}

std::vector<LimitViolation> check_limits(const Trajectory& tau,
                                         const DynamicLimits& limits) {
  validate(limits.selection);
  const std::size_t d = limits.selection.components.size();
  if (limits.lower.size() != d || limits.upper.size() != d) {
    throw Error::data("ShapeMismatch",
                      "limit bounds must match the selection size");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (limits.lower[i] > limits.upper[i]) {
      throw Error::data("ConfigInvalid", "lower bound exceeds upper bound");
    }
  }
  std::vector<LimitViolation> report;
  for (std::size_t t = 0; t < tau.states.size(); ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t c = limits.selection.components[i];
      const double v = diff_state_component(tau.states[t], c);
      if (v < limits.lower[i]) {
        report.push_back({t, c, v, limits.lower[i]});
      } else if (v > limits.upper[i]) {
        report.push_back({t, c, v, limits.upper[i]});
      }
    }
  }
  return report;
}

void save_energy_model(const EnergyModel& model, const std::string& path) {
  validate(model);
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "ovd-energy-model v1\n";
  out << "temperature " << model.temperature << '\n';
  out << "components";
  for (std::size_t c : model.selection.components) out << ' ' << c;
  out << '\n';
  out << "features " << model.mean.size() << '\n';
  for (std::size_t i = 0; i < model.mean.size(); ++i) {
    out << model.mean[i] << ' ' << model.variance[i] << '\n';
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw Error::data("ParseError", "cannot write " + tmp);
    f << out.str();
  }
  std::filesystem::rename(tmp, path);
}

EnergyModel load_energy_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::data("ParseError", "cannot open energy model " + path);
  std::string header;
  std::getline(in, header);
  if (header != "ovd-energy-model v1") {
    throw Error::data("ParseError", path + ": not an energy model file");
  }
  EnergyModel model;
  std::string key;
  if (!(in >> key >> model.temperature) || key != "temperature") {
    throw Error::data("ParseError", path + ": bad temperature line");
  }
  if (!(in >> key) || key != "components") {
    throw Error::data("ParseError", path + ": bad components line");
  }
  model.selection.components.clear();
  {
    std::string rest;
    std::getline(in, rest);
    std::istringstream ss(rest);
    std::size_t c;
    while (ss >> c) model.selection.components.push_back(c);
  }
  std::size_t k = 0;
  if (!(in >> key >> k) || key != "features") {
    throw Error::data("ParseError", path + ": bad features line");
  }
  model.mean.resize(k);
  model.variance.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(in >> model.mean[i] >> model.variance[i])) {
      throw Error::data("ParseError", path + ": truncated feature moments");
    }
  }
  validate(model);
  return model;
}

}  // namespace ovd
