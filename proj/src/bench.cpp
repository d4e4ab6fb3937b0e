#include "ovd/bench.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ovd/error.hpp"

namespace ovd {

std::string to_string(StateGroup group) {
  switch (group) {
    case StateGroup::Acceleration:
      return "Accel.";
    case StateGroup::AngularVelocity:
      return "Ang. Vel.";
    case StateGroup::Velocity:
      return "Velocity";
    case StateGroup::Position:
      return "Position";
    case StateGroup::Roll:
      return "Roll";
    case StateGroup::Pitch:
      return "Pitch";
    case StateGroup::Yaw:
      return "Yaw";
  }
  return "?";
}

std::string group_units(StateGroup group) {
  switch (group) {
    case StateGroup::Acceleration:
      return "m/s^2";
    case StateGroup::AngularVelocity:
      return "rad/s";
    case StateGroup::Velocity:
      return "m/s";
    case StateGroup::Position:
      return "m";
    default:
      return "rad";
  }
}

StateGroup parse_state_group(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "accel" || lower == "acceleration") {
    return StateGroup::Acceleration;
  }
  if (lower == "angvel" || lower == "angular_velocity") {
    return StateGroup::AngularVelocity;
  }
  if (lower == "velocity" || lower == "vel") return StateGroup::Velocity;
  if (lower == "position" || lower == "pos") return StateGroup::Position;
  if (lower == "roll") return StateGroup::Roll;
  if (lower == "pitch") return StateGroup::Pitch;
  if (lower == "yaw") return StateGroup::Yaw;
  throw Error::usage("unknown state group: " + name);
}

namespace {

/// CSV/scatter-friendly group keys.
std::string group_key(StateGroup group) {
  switch (group) {
    case StateGroup::Acceleration:
      return "accel";
    case StateGroup::AngularVelocity:
      return "angvel";
    case StateGroup::Velocity:
      return "velocity";
    case StateGroup::Position:
      return "position";
    case StateGroup::Roll:
      return "roll";
    case StateGroup::Pitch:
      return "pitch";
    case StateGroup::Yaw:
      return "yaw";
  }
  return "?";
}

double step_error(const VehicleState& pred, const VehicleState& gt,
                  StateGroup group) {
  switch (group) {
    case StateGroup::Acceleration:
      return (pred.body_acceleration - gt.body_acceleration).norm();
    case StateGroup::AngularVelocity:
      return (pred.body_angular_velocity - gt.body_angular_velocity).norm();
    case StateGroup::Velocity:
      return (pred.body_velocity - gt.body_velocity).norm();
    case StateGroup::Position:
      return (pred.position - gt.position).norm();
    case StateGroup::Roll:
      return std::abs(wrap_angle(euler_from_quat(pred.orientation).roll -
                                 euler_from_quat(gt.orientation).roll));
    case StateGroup::Pitch:
      return std::abs(wrap_angle(euler_from_quat(pred.orientation).pitch -
                                 euler_from_quat(gt.orientation).pitch));
    case StateGroup::Yaw:
      return std::abs(wrap_angle(euler_from_quat(pred.orientation).yaw -
                                 euler_from_quat(gt.orientation).yaw));
  }
  return 0.0;
}

}  // namespace

double hmne(const Trajectory& pred, const Trajectory& gt, StateGroup group) {
  if (pred.states.size() != gt.states.size()) {
    throw Error::data("LengthMismatch",
                      "prediction and ground truth differ in length");
  }
  if (std::abs(pred.dt - gt.dt) > 1e-12) {
    throw Error::data("LengthMismatch",
                      "prediction and ground truth differ in dt");
  }
  double worst = 0.0;
  for (std::size_t t = 0; t < gt.states.size(); ++t) {
    worst = std::max(worst, step_error(pred.states[t], gt.states[t], group));
  }
  return worst;
}

BenchmarkReport evaluate(const std::vector<ModelKind>& models,
                         const std::vector<DatasetEntry>& dataset,
                         const ElevationMap& map, const VehicleParams& params,
                         const MLPWeights* weights,
                         const RolloutOptions& options, int jobs,
                         const std::string& dataset_id) {
  if (dataset.empty()) {
    throw Error::data("EmptyDataset", "benchmark dataset is empty");
  }
  BenchmarkReport report;
  report.dataset_id = dataset_id;
  report.trajectory_count = dataset.size();

  for (ModelKind model : models) {
    BatchResult batch =
        rollout_batch(model, dataset, map, params, weights, options, jobs);
    for (const auto& failure : batch.failures) {
      report.excluded.push_back(
          {to_string(model), failure.id, failure.message});
    }

    auto& rows = report.per_trajectory[model];
    for (const auto& result : batch.results) {
      std::size_t idx = 0;
      while (idx < dataset.size() && dataset[idx].id != result.source_id) {
        ++idx;
      }
      std::map<StateGroup, double> values;
      for (StateGroup group : kAllGroups) {
        values[group] =
            hmne(result.predicted, dataset[idx].trajectory, group);
      }
      rows.emplace_back(result.source_id, std::move(values));
    }

    auto& cells = report.cells[model];
    for (StateGroup group : kAllGroups) {
      double mean = 0.0;
      for (const auto& [id, values] : rows) mean += values.at(group);
      const double n = static_cast<double>(rows.size());
      if (rows.empty()) {
        cells[group] = {0.0, 0.0};
        continue;
      }
      mean /= n;
      double var = 0.0;
      for (const auto& [id, values] : rows) {
        const double d = values.at(group) - mean;
        var += d * d;
      }
      cells[group] = {mean, std::sqrt(var / n)};
    }
  }
  return report;
}

namespace {

/// Solve the 4x4 normal equations with partial pivoting.
std::array<double, 4> solve4(std::array<std::array<double, 5>, 4> m) {
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-12) {
      throw Error::numerical("SingularFit",
                             "normal equations are singular");
    }
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double k = m[r][col] / m[col][col];
      for (int c = col; c < 5; ++c) m[r][c] -= k * m[col][c];
    }
  }
  std::array<double, 4> x{};
  for (int r = 0; r < 4; ++r) x[r] = m[r][4] / m[r][r];
  return x;
}

}  // namespace

TrendFit trend(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4) {
    throw Error::numerical("InsufficientPoints",
                           "cubic fit needs at least 4 points");
  }
  std::vector<double> distinct;
  for (const auto& [e, y] : points) distinct.push_back(e);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  if (distinct.size() < 4) {
    throw Error::numerical("SingularFit",
                           "cubic fit needs at least 4 distinct abscissae");
  }

  // Center and scale the abscissa for conditioning.
  double mean = 0.0;
  for (const auto& [e, y] : points) mean += e;
  mean /= static_cast<double>(points.size());
  double scale = 0.0;
  for (const auto& [e, y] : points) {
    scale = std::max(scale, std::abs(e - mean));
  }
  if (scale <= 0.0) {
    throw Error::numerical("SingularFit", "all abscissae identical");
  }

  std::array<std::array<double, 5>, 4> normal{};
  for (const auto& [e, y] : points) {
    const double z = (e - mean) / scale;
    std::array<double, 4> basis{1.0, z, z * z, z * z * z};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) normal[r][c] += basis[r] * basis[c];
      normal[r][4] += basis[r] * y;
    }
  }
  const std::array<double, 4> a = solve4(normal);

  // Expand p((E - mean)/scale) back into raw-E coefficients.
  const double u = 1.0 / scale;
  const double v = -mean / scale;
  TrendFit fit;
  fit.coefficients[0] = a[0] + a[1] * v + a[2] * v * v + a[3] * v * v * v;
  fit.coefficients[1] = a[1] * u + 2.0 * a[2] * u * v + 3.0 * a[3] * u * v * v;
  fit.coefficients[2] = a[2] * u * u + 3.0 * a[3] * u * u * v;
  fit.coefficients[3] = a[3] * u * u * u;
  fit.points = points;

  double rss = 0.0;
  for (const auto& [e, y] : points) {
    const double r = y - trend_eval(fit, e);
    rss += r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  if (!std::isfinite(fit.residual_norm)) {
    throw Error::numerical("SingularFit", "fit produced non-finite residuals");
  }
  return fit;
}

double trend_eval(const TrendFit& fit, double energy_value) {
  const auto& c = fit.coefficients;
  return ((c[3] * energy_value + c[2]) * energy_value + c[1]) * energy_value +
         c[0];
}

namespace {

std::string format_cell(const CellStats& stats) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << stats.mean << " ± "
      << stats.stddev;
  return out.str();
}

}  // namespace

std::string render_report_text(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "Model Performance (H-MNE), dataset " << report.dataset_id << ", "
      << report.trajectory_count << " trajectories\n";

  std::vector<std::string> headers = {"Model"};
  for (StateGroup group : kAllGroups) {
    headers.push_back(to_string(group) + " (" + group_units(group) + ")");
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& [model, cells] : report.cells) {
    std::vector<std::string> row = {to_string(model)};
    for (StateGroup group : kAllGroups) row.push_back(format_cell(cells.at(group)));
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> widths(headers.size());
  auto display_width = [](const std::string& s) {
    // The ± glyph is two bytes but one column.
    std::size_t w = 0;
    for (unsigned char c : s) {
      if ((c & 0xc0) != 0x80) ++w;
    }
    return w;
  };
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = display_width(headers[c]);
    for (const auto& row : rows) {
      widths[c] = std::max(widths[c], display_width(row[c]));
    }
  }
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c]
          << std::string(widths[c] - display_width(row[c]) + 2, ' ');
    }
    out << '\n';
  };
  emit_row(headers);
  for (const auto& row : rows) emit_row(row);

  if (!report.excluded.empty()) {
    out << "Excluded trajectories:\n";
    for (const auto& e : report.excluded) {
      out << "  " << e.model << ' ' << e.id << ": " << e.reason << '\n';
    }
  }
  return out.str();
}

std::string render_report_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "dataset,model,group,mean,std\n";
  for (const auto& [model, cells] : report.cells) {
    for (StateGroup group : kAllGroups) {
      const auto& stats = cells.at(group);
      out << report.dataset_id << ',' << to_string(model) << ','
          << group_key(group) << ',' << stats.mean << ',' << stats.stddev
          << '\n';
    }
  }
  for (const auto& e : report.excluded) {
    out << report.dataset_id << ',' << e.model << ",excluded," << e.id << ','
        << e.reason << '\n';
  }
  return out.str();
}

std::string render_scatter(const BenchmarkReport& report,
                           const std::map<std::string, double>& energies) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "# id model energy";
  for (StateGroup group : kAllGroups) out << ' ' << group_key(group);
  out << '\n';
  for (const auto& [model, rows] : report.per_trajectory) {
    for (const auto& [id, values] : rows) {
      auto it = energies.find(id);
      const double e = it == energies.end()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : it->second;
      out << id << ' ' << to_string(model) << ' ' << e;
      for (StateGroup group : kAllGroups) out << ' ' << values.at(group);
      out << '\n';
    }
  }
  return out.str();
}

std::vector<ScatterRow> parse_scatter(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ScatterRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ScatterRow row;
    std::string model;
    if (!(ss >> row.id >> model >> row.energy)) {
      throw Error::data("ParseError", "bad scatter row: " + line);
    }
    row.model = parse_model_kind(model);
    for (StateGroup group : kAllGroups) {
      double v;
      if (!(ss >> v)) {
        throw Error::data("ParseError", "truncated scatter row: " + line);
      }
      row.hmne[group] = v;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ovd
