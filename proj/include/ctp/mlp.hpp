#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ctp/features.hpp"

namespace ctp {

/// One point of the NN structure search space.
struct NNConfig {
  static constexpr int kMinLayers = 1;
  static constexpr int kMaxLayers = 5;
  static constexpr int kMinNeurons = 1;
  static constexpr int kMaxNeurons = 35;

  std::vector<int> neurons;  // one entry per hidden layer

  NNConfig() = default;
  /// Throws InvalidConfig when outside the search space.
  explicit NNConfig(std::vector<int> per_layer);

  int hidden_layers() const noexcept { return static_cast<int>(neurons.size()); }
  bool valid() const noexcept;
  std::string to_string() const;  // e.g. "8;12"

  friend bool operator==(const NNConfig&, const NNConfig&) = default;
  friend auto operator<=>(const NNConfig&, const NNConfig&) = default;
};

/// Dense layer: out = weights * in + bias, weights is (fan_out x fan_in).
struct MlpLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  friend bool operator==(const MlpLayer& a, const MlpLayer& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.weights == b.weights && a.bias.size() == b.bias.size() && a.bias == b.bias;
  }
};

/// ReLU hidden layers, linear output. Inputs go through the standardizer;
/// outputs come out scaled by the training-target mean and std.
struct MlpModel {
  NNConfig config;
  std::vector<MlpLayer> layers;
  Standardizer standardizer;
  double target_mean = 0.0;
  double target_std = 1.0;

  /// Raw network output for standardized inputs (columns = samples).
  Eigen::RowVectorXd forward_standardized(const Eigen::MatrixXd& z) const;
  double predict(const Vec3& counters) const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

struct MlpTrainOptions {
  std::size_t epochs = 500;
  std::size_t batch_size = 32;  // 0 = full batch
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 42;
};

/// Layers shaped for `config` (3 inputs, 1 output), Glorot-uniform weights,
/// zero biases. Throws InvalidConfig.
std::vector<MlpLayer> init_mlp_layers(const NNConfig& config, std::uint64_t seed);

struct MlpLossGradient {
  double loss = 0.0;
  std::vector<MlpLayer> gradient;  // same shapes as the layers
};

/// Mean squared error over columns of `z` against `y` (both already scaled)
/// and its gradient by backpropagation.
MlpLossGradient mlp_loss_gradient(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& z,
                                  const Eigen::RowVectorXd& y);
double mlp_loss(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& z, const Eigen::RowVectorXd& y);

/// Mini-batch gradient descent with momentum. Deterministic per seed.
/// Throws InsufficientData, NonFiniteInput, NonFiniteLoss.
MlpModel train_mlp(std::span<const Vec3> inputs, std::span<const double> targets,
                   const NNConfig& config, const MlpTrainOptions& options = {});

}  // namespace ctp
