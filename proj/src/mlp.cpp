#include "ctp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ctp/error.hpp"

namespace ctp {

NNConfig::NNConfig(std::vector<int> per_layer) : neurons(std::move(per_layer)) {
  if (!valid()) {
    throw Error(Errc::InvalidConfig, "NN structure outside the search space: '" + to_string() +
                                         "' (1-5 layers, 1-35 neurons each)");
  }
}

bool NNConfig::valid() const noexcept {
  if (hidden_layers() < kMinLayers || hidden_layers() > kMaxLayers) return false;
  return std::all_of(neurons.begin(), neurons.end(),
                     [](int n) { return n >= kMinNeurons && n <= kMaxNeurons; });
}

std::string NNConfig::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < neurons.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(neurons[i]);
  }
  return s;
}

std::vector<MlpLayer> init_mlp_layers(const NNConfig& config, std::uint64_t seed) {
  if (!config.valid()) throw Error(Errc::InvalidConfig, "invalid NN structure '" + config.to_string() + "'");
  std::mt19937_64 rng(seed);
  std::vector<MlpLayer> layers;
  int fan_in = 3;
  auto add = [&](int fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    MlpLayer layer;
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = dist(rng);
    }
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (int n : config.neurons) add(n);
  add(1);
  return layers;
}

namespace {

Eigen::MatrixXd forward(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& z,
                        std::vector<Eigen::MatrixXd>* activations) {
  Eigen::MatrixXd a = z;
  if (activations) activations->push_back(a);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Eigen::MatrixXd pre = (layers[k].weights * a).colwise() + layers[k].bias;
    if (k + 1 < layers.size()) pre = pre.cwiseMax(0.0);
    a = std::move(pre);
    if (activations) activations->push_back(a);
  }
  return a;
}

}  // namespace

Eigen::RowVectorXd MlpModel::forward_standardized(const Eigen::MatrixXd& z) const {
  return forward(layers, z, nullptr).row(0);
}

double MlpModel::predict(const Vec3& counters) const {
  const Vec3 s = standardizer.apply(counters);
  Eigen::MatrixXd z(3, 1);
  z << s[0], s[1], s[2];
  return forward_standardized(z)(0) * target_std + target_mean;
}

MlpLossGradient mlp_loss_gradient(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& z,
                                  const Eigen::RowVectorXd& y) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers.size() + 1);
  const Eigen::MatrixXd out = forward(layers, z, &acts);
  const double n = static_cast<double>(z.cols());
  const Eigen::RowVectorXd err = out.row(0) - y;

  MlpLossGradient result;
  result.loss = err.squaredNorm() / n;
  result.gradient.resize(layers.size());
  Eigen::MatrixXd delta = (2.0 / n) * err;  // dL/d(pre-activation) of the output layer
  for (std::size_t k = layers.size(); k-- > 0;) {
    result.gradient[k].weights = delta * acts[k].transpose();
    result.gradient[k].bias = delta.rowwise().sum();
    if (k > 0) {
      Eigen::MatrixXd back = layers[k].weights.transpose() * delta;
      // acts[k] is the ReLU output of layer k-1; its derivative is 1 where positive.
      delta = back.cwiseProduct((acts[k].array() > 0.0).cast<double>().matrix());
    }
  }
  return result;
}

double mlp_loss(const std::vector<MlpLayer>& layers, const Eigen::MatrixXd& z, const Eigen::RowVectorXd& y) {
  const Eigen::MatrixXd out = forward(layers, z, nullptr);
  return (out.row(0) - y).squaredNorm() / static_cast<double>(z.cols());
}

MlpModel train_mlp(std::span<const Vec3> inputs, std::span<const double> targets,
                   const NNConfig& config, const MlpTrainOptions& options) {
  if (inputs.size() != targets.size()) throw Error(Errc::InvalidConfig, "inputs and targets differ in length");
  if (inputs.size() < 10) {
    throw Error(Errc::InsufficientData, "need at least 10 samples, got " + std::to_string(inputs.size()));
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!std::isfinite(targets[i]) || !std::isfinite(inputs[i][0]) || !std::isfinite(inputs[i][1]) ||
        !std::isfinite(inputs[i][2])) {
      throw Error(Errc::NonFiniteInput, "non-finite value in training row " + std::to_string(i));
    }
  }

  MlpModel model;
  model.config = config;
  model.layers = init_mlp_layers(config, options.seed);
  model.standardizer = Standardizer::fit(inputs);

  const auto n = static_cast<Eigen::Index>(inputs.size());
  double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double t : targets) var += (t - mean) * (t - mean);
  var /= static_cast<double>(n);
  model.target_mean = mean;
  model.target_std = var > 0.0 ? std::sqrt(var) : 1.0;

  Eigen::MatrixXd z(3, n);
  Eigen::RowVectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3 s = model.standardizer.apply(inputs[static_cast<std::size_t>(i)]);
    z(0, i) = s[0];
    z(1, i) = s[1];
    z(2, i) = s[2];
    y(i) = (targets[static_cast<std::size_t>(i)] - model.target_mean) / model.target_std;
  }

  std::vector<MlpLayer> velocity = model.layers;
  for (auto& v : velocity) {
    v.weights.setZero();
    v.bias.setZero();
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(options.seed ^ 0x5851f42d4c957f2dULL);
  const Eigen::Index batch =
      options.batch_size == 0 ? n : std::min<Eigen::Index>(n, static_cast<Eigen::Index>(options.batch_size));

  Eigen::MatrixXd zb;
  Eigen::RowVectorXd yb;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      zb.resize(3, len);
      yb.resize(len);
      for (Eigen::Index k = 0; k < len; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + k)];
        zb.col(k) = z.col(src);
        yb(k) = y(src);
      }
      const auto lg = mlp_loss_gradient(model.layers, zb, yb);
      epoch_loss += lg.loss * static_cast<double>(len);
      for (std::size_t k = 0; k < model.layers.size(); ++k) {
        velocity[k].weights = options.momentum * velocity[k].weights - options.learning_rate * lg.gradient[k].weights;
        velocity[k].bias = options.momentum * velocity[k].bias - options.learning_rate * lg.gradient[k].bias;
        model.layers[k].weights += velocity[k].weights;
        model.layers[k].bias += velocity[k].bias;
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw Error(Errc::NonFiniteLoss, "MLP " + config.to_string() + " diverged at epoch " +
                                           std::to_string(epoch) + " (lr " +
                                           std::to_string(options.learning_rate) + ")");
    }
  }
  return model;
}

}  // namespace ctp
