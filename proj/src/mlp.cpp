#include "ovd/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ovd/error.hpp"
#include "ovd/rng.hpp"

namespace ovd {

Standardizer Standardizer::identity(std::size_t dim) {
  Standardizer s;
  s.mean.assign(dim, 0.0);
  s.stddev.assign(dim, 1.0);
  return s;
}

void validate(const MLPWeights& w) {
  if (w.layers.empty()) {
    throw Error::data("ShapeMismatch", "network has no layers");
  }
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& layer = w.layers[l];
    if (layer.weights.size() !=
        static_cast<std::size_t>(layer.inputs) * layer.outputs) {
      throw Error::data("ShapeMismatch", "layer weight matrix size mismatch");
    }
    if (layer.biases.size() != layer.outputs) {
      throw Error::data("ShapeMismatch", "layer bias size mismatch");
    }
    if (l + 1 < w.layers.size() &&
        layer.outputs != w.layers[l + 1].inputs) {
      throw Error::data("ShapeMismatch", "adjacent layer dims do not chain");
    }
    for (double v : layer.weights) {
      if (!std::isfinite(v)) {
        throw Error::data("ConfigInvalid", "non-finite weight");
      }
    }
  }
  if (w.layers.back().outputs != kDeltaDim) {
    throw Error::data("ShapeMismatch", "output layer must have 6 outputs");
  }
  if (w.input_stats.size() != w.layers.front().inputs ||
      w.input_stats.stddev.size() != w.input_stats.mean.size()) {
    throw Error::data("ShapeMismatch", "input stats dim mismatch");
  }
  if (w.target_stats.size() != kDeltaDim ||
      w.target_stats.stddev.size() != kDeltaDim) {
    throw Error::data("ShapeMismatch", "target stats dim mismatch");
  }
  for (double s : w.input_stats.stddev) {
    if (!(s > 0.0)) {
      throw Error::data("ConfigInvalid", "input stddev must be positive");
    }
  }
  for (double s : w.target_stats.stddev) {
    if (!(s > 0.0)) {
      throw Error::data("ConfigInvalid", "target stddev must be positive");
    }
  }
}

namespace {

void check_feature_dim(const MLPWeights& w, std::size_t got) {
  if (got != w.input_dim()) {
    throw Error::data("ShapeMismatch",
                      "feature vector length " + std::to_string(got) +
                          " does not match network input " +
                          std::to_string(w.input_dim()));
  }
}

std::vector<double> standardize_input(const MLPWeights& w,
                                      std::span<const double> features) {
  std::vector<double> x(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    x[i] = (features[i] - w.input_stats.mean[i]) / w.input_stats.stddev[i];
  }
  return x;
}

void apply_layer(const MlpLayer& layer, const std::vector<double>& in,
                 std::vector<double>& pre, std::vector<double>& out) {
  pre.assign(layer.outputs, 0.0);
  for (std::uint32_t o = 0; o < layer.outputs; ++o) {
    const double* row = layer.weights.data() +
                        static_cast<std::size_t>(o) * layer.inputs;
    double acc = layer.biases[o];
    for (std::uint32_t i = 0; i < layer.inputs; ++i) acc += row[i] * in[i];
    pre[o] = acc;
  }
  out = pre;
  if (layer.activation == Activation::Tanh) {
    for (double& v : out) v = std::tanh(v);
  }
}

/// Activations per layer boundary: acts[0] is the standardized input,
/// acts[l+1] the output of layer l.
std::vector<std::vector<double>> forward_pass(const MLPWeights& w,
                                              std::span<const double> features) {
  check_feature_dim(w, features.size());
  std::vector<std::vector<double>> acts;
  acts.reserve(w.layers.size() + 1);
  acts.push_back(standardize_input(w, features));
  std::vector<double> pre;
  for (const auto& layer : w.layers) {
    std::vector<double> out;
    apply_layer(layer, acts.back(), pre, out);
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

std::vector<double> forward(const MLPWeights& w,
                            std::span<const double> features) {
  return forward_pass(w, features).back();
}

BackwardResult backward(const MLPWeights& w, std::span<const double> features,
                        std::span<const double, kDeltaDim> target) {
  const auto acts = forward_pass(w, features);
  const auto& output = acts.back();

  BackwardResult result;
  result.gradients.layers.resize(w.layers.size());

  // MSE averaged over the 6 outputs.
  std::vector<double> delta(kDeltaDim);
  for (std::size_t i = 0; i < kDeltaDim; ++i) {
    const double err = output[i] - target[i];
    result.loss += err * err;
    delta[i] = 2.0 * err / kDeltaDim;
  }
  result.loss /= kDeltaDim;

  for (std::size_t l = w.layers.size(); l-- > 0;) {
    const auto& layer = w.layers[l];
    const auto& in = acts[l];
    const auto& out = acts[l + 1];
    auto& grad = result.gradients.layers[l];

    // delta currently holds dL/da for this layer's output; fold in the
    // activation derivative to get dL/dz.
    if (layer.activation == Activation::Tanh) {
      for (std::uint32_t o = 0; o < layer.outputs; ++o) {
        delta[o] *= 1.0 - out[o] * out[o];
      }
    }

    grad.weights.assign(layer.weights.size(), 0.0);
    grad.biases.assign(layer.outputs, 0.0);
    std::vector<double> prev_delta(layer.inputs, 0.0);
    for (std::uint32_t o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      grad.biases[o] = d;
      double* wrow = grad.weights.data() +
                     static_cast<std::size_t>(o) * layer.inputs;
      const double* row = layer.weights.data() +
                          static_cast<std::size_t>(o) * layer.inputs;
      for (std::uint32_t i = 0; i < layer.inputs; ++i) {
        wrow[i] = d * in[i];
        prev_delta[i] += row[i] * d;
      }
    }
    delta = std::move(prev_delta);
  }
  return result;
}

std::array<double, kDeltaDim> predict_delta(const MLPWeights& w,
                                            std::span<const double> features) {
  const auto out = forward(w, features);
  std::array<double, kDeltaDim> delta{};
  for (std::size_t i = 0; i < kDeltaDim; ++i) {
    delta[i] = out[i] * w.target_stats.stddev[i] + w.target_stats.mean[i];
  }
  return delta;
}

MLPWeights init_weights(std::size_t input_dim,
                        const std::vector<std::uint32_t>& hidden_sizes,
                        std::uint64_t seed) {
  if (input_dim == 0) {
    throw Error::data("ShapeMismatch", "input dimension must be positive");
  }
  Rng rng(seed);
  MLPWeights w;
  std::vector<std::uint32_t> dims;
  dims.push_back(static_cast<std::uint32_t>(input_dim));
  dims.insert(dims.end(), hidden_sizes.begin(), hidden_sizes.end());
  dims.push_back(kDeltaDim);

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    MlpLayer layer;
    layer.inputs = dims[l];
    layer.outputs = dims[l + 1];
    layer.activation =
        (l + 2 == dims.size()) ? Activation::Identity : Activation::Tanh;
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
    layer.weights.resize(static_cast<std::size_t>(layer.inputs) *
                         layer.outputs);
    for (double& v : layer.weights) v = rng.uniform(-scale, scale);
    layer.biases.assign(layer.outputs, 0.0);
    w.layers.push_back(std::move(layer));
  }
  w.input_stats = Standardizer::identity(input_dim);
  w.target_stats = Standardizer::identity(kDeltaDim);
  return w;
}

namespace {

Standardizer fit_stats(const std::vector<const double*>& rows,
                       std::size_t dim) {
  Standardizer s;
  s.mean.assign(dim, 0.0);
  s.stddev.assign(dim, 0.0);
  const double n = static_cast<double>(rows.size());
  for (const double* row : rows) {
    for (std::size_t i = 0; i < dim; ++i) s.mean[i] += row[i];
  }
  for (std::size_t i = 0; i < dim; ++i) s.mean[i] /= n;
  for (const double* row : rows) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = row[i] - s.mean[i];
      s.stddev[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    s.stddev[i] = std::sqrt(s.stddev[i] / n);
    if (s.stddev[i] < 1e-8) s.stddev[i] = 1.0;  // constant channel
  }
  return s;
}

double mean_loss(const MLPWeights& w, const std::vector<Sample>& dataset,
                 const std::vector<std::size_t>& indices) {
  double total = 0.0;
  for (std::size_t idx : indices) {
    const auto& sample = dataset[idx];
    const auto out = forward(w, sample.features);
    std::array<double, kDeltaDim> t;
    for (std::size_t i = 0; i < kDeltaDim; ++i) {
      t[i] = (sample.target[i] - w.target_stats.mean[i]) /
             w.target_stats.stddev[i];
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < kDeltaDim; ++i) {
      const double err = out[i] - t[i];
      loss += err * err;
    }
    total += loss / kDeltaDim;
  }
  return total / static_cast<double>(indices.size());
}

}  // namespace

TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& cfg) {
  if (dataset.empty()) {
    throw Error::data("EmptyDataset", "training dataset is empty");
  }
  if (!(cfg.learning_rate > 0.0)) {
    throw Error::data("ConfigInvalid", "learning rate must be positive");
  }
  if (cfg.epochs < 1) {
    throw Error::data("ConfigInvalid", "epochs must be >= 1");
  }
  if (cfg.batch_size < 1) {
    throw Error::data("ConfigInvalid", "batch size must be >= 1");
  }
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw Error::data("ConfigInvalid", "validation fraction must be in (0,1)");
  }
  const std::size_t dim = dataset.front().features.size();
  for (const auto& s : dataset) {
    if (s.features.size() != dim) {
      throw Error::data("ShapeMismatch", "inconsistent feature dimensions");
    }
  }

  Rng rng(cfg.seed);

  // Seeded shuffle, then carve off the validation tail.
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  std::size_t n_val = static_cast<std::size_t>(
      std::floor(cfg.validation_fraction * static_cast<double>(order.size())));
  if (n_val >= order.size()) n_val = order.size() - 1;
  std::vector<std::size_t> train_idx(order.begin(), order.end() - n_val);
  std::vector<std::size_t> val_idx(order.end() - n_val, order.end());
  if (val_idx.empty()) val_idx = train_idx;

  MLPWeights w = init_weights(dim, cfg.hidden_sizes, cfg.seed + 1);
  std::vector<const double*> feature_rows;
  feature_rows.reserve(train_idx.size());
  std::vector<const double*> target_rows;
  target_rows.reserve(train_idx.size());
  for (std::size_t idx : train_idx) {
    feature_rows.push_back(dataset[idx].features.data());
    target_rows.push_back(dataset[idx].target.data());
  }
  w.input_stats = fit_stats(feature_rows, dim);
  w.target_stats = fit_stats(target_rows, kDeltaDim);

  TrainResult result;
  result.history.train_loss.reserve(cfg.epochs);
  result.history.val_loss.reserve(cfg.epochs);

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<std::size_t> epoch_order = train_idx;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = epoch_order.size(); i > 1; --i) {
      std::swap(epoch_order[i - 1], epoch_order[rng.uniform_index(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < epoch_order.size(); start += batch) {
      const std::size_t end = std::min(start + batch, epoch_order.size());
      Gradients accum;
      accum.layers.resize(w.layers.size());
      for (std::size_t l = 0; l < w.layers.size(); ++l) {
        accum.layers[l].weights.assign(w.layers[l].weights.size(), 0.0);
        accum.layers[l].biases.assign(w.layers[l].biases.size(), 0.0);
      }
      for (std::size_t k = start; k < end; ++k) {
        const auto& sample = dataset[epoch_order[k]];
        std::array<double, kDeltaDim> t;
        for (std::size_t i = 0; i < kDeltaDim; ++i) {
          t[i] = (sample.target[i] - w.target_stats.mean[i]) /
                 w.target_stats.stddev[i];
        }
        auto bw = backward(w, sample.features,
                           std::span<const double, kDeltaDim>(t));
        epoch_loss += bw.loss;
        for (std::size_t l = 0; l < w.layers.size(); ++l) {
          auto& acc = accum.layers[l];
          const auto& g = bw.gradients.layers[l];
          for (std::size_t i = 0; i < acc.weights.size(); ++i) {
            acc.weights[i] += g.weights[i];
          }
          for (std::size_t i = 0; i < acc.biases.size(); ++i) {
            acc.biases[i] += g.biases[i];
          }
        }
      }
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t l = 0; l < w.layers.size(); ++l) {
        auto& layer = w.layers[l];
        const auto& acc = accum.layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
          layer.weights[i] -= step * acc.weights[i];
        }
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
          layer.biases[i] -= step * acc.biases[i];
        }
      }
    }
    result.history.train_loss.push_back(
        epoch_loss / static_cast<double>(epoch_order.size()));
    result.history.val_loss.push_back(mean_loss(w, dataset, val_idx));
  }
  result.weights = std::move(w);
  return result;
}

std::size_t feature_dimension(std::uint32_t patch_size) {
  return 10 + static_cast<std::size_t>(patch_size) * patch_size;
}

std::vector<double> featurize_raw(const VehicleState& state,
                                  const ControlInput& u,
                                  const TerrainPatch& patch) {
  const EulerAngles e = euler_from_quat(state.orientation);
  std::vector<double> f;
  f.reserve(feature_dimension(patch.size));
  f.push_back(state.body_velocity.x);
  f.push_back(state.body_velocity.y);
  f.push_back(state.body_velocity.z);
  f.push_back(state.body_angular_velocity.x);
  f.push_back(state.body_angular_velocity.y);
  f.push_back(state.body_angular_velocity.z);
  f.push_back(e.roll);
  f.push_back(e.pitch);
  f.insert(f.end(), patch.heights.begin(), patch.heights.end());
  f.push_back(u.steering);
  f.push_back(u.wheel_speed);
  return f;
}

std::vector<double> featurize(const VehicleState& state, const ControlInput& u,
                              const TerrainPatch& patch,
                              const Standardizer& stats) {
  std::vector<double> f = featurize_raw(state, u, patch);
  if (stats.size() != f.size() || stats.stddev.size() != f.size()) {
    throw Error::data("ShapeMismatch",
                      "standardizer dim does not match feature vector");
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = (f[i] - stats.mean[i]) / stats.stddev[i];
  }
  return f;
}

namespace {

constexpr char kWeightsMagic[4] = {'O', 'V', 'D', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::vector<double>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void save_weights(const MLPWeights& w, const std::string& path) {
  validate(w);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error::data("ParseError", "cannot write " + tmp);
    out.write(kWeightsMagic, 4);
    write_raw(out, kWeightsVersion);
    write_raw(out, static_cast<std::uint32_t>(w.layers.size()));
    for (const auto& layer : w.layers) {
      write_raw(out, layer.inputs);
      write_raw(out, layer.outputs);
      write_raw(out, static_cast<std::uint8_t>(layer.activation));
    }
    write_raw(out, static_cast<std::uint32_t>(w.input_stats.size()));
    write_doubles(out, w.input_stats.mean);
    write_doubles(out, w.input_stats.stddev);
    write_doubles(out, w.target_stats.mean);
    write_doubles(out, w.target_stats.stddev);
    for (const auto& layer : w.layers) {
      write_doubles(out, layer.weights);
      write_doubles(out, layer.biases);
    }
    if (!out) throw Error::data("ParseError", "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

MLPWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("ParseError", "cannot open weights file " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0) {
    throw Error::data("ParseError", path + ": not a weights file");
  }
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kWeightsVersion) {
    throw Error::data("ParseError", path + ": unsupported weights version " +
                                        std::to_string(version));
  }
  const auto n_layers = read_raw<std::uint32_t>(in);
  if (n_layers == 0 || n_layers > 64) {
    throw Error::data("ParseError", path + ": implausible layer count");
  }
  MLPWeights w;
  w.layers.resize(n_layers);
  for (auto& layer : w.layers) {
    layer.inputs = read_raw<std::uint32_t>(in);
    layer.outputs = read_raw<std::uint32_t>(in);
    layer.activation = static_cast<Activation>(read_raw<std::uint8_t>(in));
  }
  const auto input_dim = read_raw<std::uint32_t>(in);
  if (!in) throw Error::data("ParseError", path + ": truncated header");
  std::vector<double> buf;
  read_doubles(in, w.input_stats.mean, input_dim);
  read_doubles(in, w.input_stats.stddev, input_dim);
  read_doubles(in, w.target_stats.mean, kDeltaDim);
  read_doubles(in, w.target_stats.stddev, kDeltaDim);
  for (auto& layer : w.layers) {
    read_doubles(in, layer.weights,
                 static_cast<std::size_t>(layer.inputs) * layer.outputs);
    read_doubles(in, layer.biases, layer.outputs);
  }
  if (!in) throw Error::data("ParseError", path + ": truncated weight data");
  validate(w);
  return w;
}

void save_training_report(const TrainHistory& history,
                          const std::string& path) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "epoch train_loss val_loss\n";
  for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
    out << i << ' ' << history.train_loss[i] << ' ' << history.val_loss[i]
        << '\n';
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw Error::data("ParseError", "cannot write " + tmp);
    f << out.str();
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ovd
