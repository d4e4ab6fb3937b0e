// In-repo multilayer perceptron with manual backpropagation: forward,
// exact gradients, deterministic mini-batch training, featurization for the
// terrain-conditioned model, and binary weight serialization.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ovd/elevation_map.hpp"
#include "ovd/types.hpp"

namespace ovd {

inline constexpr std::size_t kDeltaDim = 6;  // dV (3) + dOmega (3)

enum class Activation : std::uint8_t { Tanh = 0, Identity = 1 };

struct MlpLayer {
  std::uint32_t inputs = 0;
  std::uint32_t outputs = 0;
  Activation activation = Activation::Identity;
  std::vector<double> weights;  // row-major, outputs x inputs
  std::vector<double> biases;   // outputs
};

/// Per-channel standardization statistics, (x - mean) / stddev.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t size() const { return mean.size(); }
  /// Identity stats (mean 0, stddev 1) of the given dimension.
  static Standardizer identity(std::size_t dim);
};

/// Network weights plus the input/target standardization applied around it.
/// The output dimension is always kDeltaDim.
struct MLPWeights {
  std::vector<MlpLayer> layers;
  Standardizer input_stats;
  Standardizer target_stats;

  std::size_t input_dim() const {
    return layers.empty() ? 0 : layers.front().inputs;
  }
};

void validate(const MLPWeights& w);

struct TrainConfig {
  double learning_rate = 0.02;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> hidden_sizes = {64, 64};
  double validation_fraction = 0.2;
};

struct Sample {
  std::vector<double> features;          // raw, unstandardized
  std::array<double, kDeltaDim> target;  // raw (dV, dOmega)
};

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch, standardized-target space
  std::vector<double> val_loss;
};

struct TrainResult {
  MLPWeights weights;
  TrainHistory history;
};

/// Gradients with the same shape as the layer stack.
struct Gradients {
  struct LayerGrad {
    std::vector<double> weights;
    std::vector<double> biases;
  };
  std::vector<LayerGrad> layers;
};

/// Standardize the input and run the layer stack. The result lives in the
/// standardized-target space; use predict_delta for physical units.
std::vector<double> forward(const MLPWeights& w,
                            std::span<const double> features);

/// MSE loss (mean over the 6 outputs) against a target in the network's
/// output space, plus exact gradients for every weight and bias.
struct BackwardResult {
  double loss = 0.0;
  Gradients gradients;
};
BackwardResult backward(const MLPWeights& w, std::span<const double> features,
                        std::span<const double, kDeltaDim> target);

/// forward() followed by target de-standardization: the physical
/// (dV, dOmega) prediction.
std::array<double, kDeltaDim> predict_delta(const MLPWeights& w,
                                            std::span<const double> features);

/// Freshly initialized network (seeded uniform init, identity stats).
MLPWeights init_weights(std::size_t input_dim,
                        const std::vector<std::uint32_t>& hidden_sizes,
                        std::uint64_t seed);

/// Deterministic mini-batch gradient descent. Standardization statistics are
/// computed from the training split only.
TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& cfg);

/// Feature vector in the fixed order
///   [V^b (3), omega^b (3), roll, pitch, patch (size^2), steering,
///    wheel_speed],
/// standardized with the given stats.
std::vector<double> featurize(const VehicleState& state,
                              const ControlInput& u, const TerrainPatch& patch,
                              const Standardizer& stats);

/// Same order, no standardization. Training datasets are built from this.
std::vector<double> featurize_raw(const VehicleState& state,
                                  const ControlInput& u,
                                  const TerrainPatch& patch);

std::size_t feature_dimension(std::uint32_t patch_size);

/// Binary weight file; round-trips bitwise (doubles stored verbatim).
void save_weights(const MLPWeights& w, const std::string& path);
MLPWeights load_weights(const std::string& path);

/// Per-epoch loss table as a small text report.
void save_training_report(const TrainHistory& history, const std::string& path);

}  // namespace ovd
