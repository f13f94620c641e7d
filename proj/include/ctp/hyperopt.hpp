#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "ctp/features.hpp"
#include "ctp/mlp.hpp"

namespace ctp {

/// Admissible NN structures: 1-5 hidden layers with 1-35 neurons each.
struct SearchSpace {
  int min_layers = NNConfig::kMinLayers;
  int max_layers = NNConfig::kMaxLayers;
  int min_neurons = NNConfig::kMinNeurons;
  int max_neurons = NNConfig::kMaxNeurons;

  bool contains(const NNConfig& config) const noexcept;
  /// Layer count uniform, then each layer's width uniform.
  NNConfig sample(std::mt19937_64& rng) const;
  /// Fixed-length encoding in [0, 1]^6: layer count, then five width slots
  /// (unused slots are 0).
  std::array<double, 6> encode(const NNConfig& config) const noexcept;
};

using Objective = std::function<double(const NNConfig&)>;

struct SearchEntry {
  NNConfig config;
  double score = 0.0;
};

struct SearchRecord {
  std::vector<SearchEntry> history;
  std::size_t best = 0;
  std::size_t budget = 0;

  const SearchEntry& best_entry() const { return history.at(best); }
};

/// Trains an MLP on the training set and scores it by mean APE on that same
/// set. Divergent training scores +infinity.
double training_mape(const NNConfig& config, std::span<const Vec3> inputs, std::span<const double> targets,
                     const MlpTrainOptions& options = {});

SearchRecord random_search(const SearchSpace& space, std::size_t budget, const Objective& objective,
                           std::uint64_t seed);

struct BayesOptions {
  std::size_t init_points = 10;
  std::size_t candidates = 500;
};
SearchRecord bayes_opt(const SearchSpace& space, std::size_t budget, const Objective& objective,
                       std::uint64_t seed, const BayesOptions& options = {});

struct TpeOptions {
  double gamma_quantile = 0.25;
  std::size_t init_points = 10;
  std::size_t candidates = 100;
};
/// Simplified tree-structured Parzen estimator: per-dimension Laplace-smoothed
/// histograms for the good and bad halves of the history.
SearchRecord tpe_search(const SearchSpace& space, std::size_t budget, const Objective& objective,
                        std::uint64_t seed, const TpeOptions& options = {});

/// Zero-mean GP with a unit-variance squared-exponential covariance.
class GaussianProcess {
 public:
  /// Throws DegenerateGram when the Gram matrix stays indefinite after the
  /// jitter has been escalated to 1e-2.
  GaussianProcess(Eigen::MatrixXd points, Eigen::VectorXd values, double length_scale, double noise = 1e-6);

  /// Picks the length scale with the highest marginal likelihood from `grid`.
  static GaussianProcess fit_ml(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                                std::span<const double> grid, double noise = 1e-6);

  struct Posterior {
    double mean;
    double variance;
  };
  Posterior predict(const Eigen::VectorXd& x) const;
  double log_marginal_likelihood() const noexcept { return log_ml_; }
  double length_scale() const noexcept { return length_scale_; }
  double noise() const noexcept { return noise_; }

 private:
  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

  Eigen::MatrixXd points_;  // rows = observations
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
  double length_scale_;
  double noise_;
  double log_ml_ = 0.0;
};

/// Expected improvement below `best` for a minimization problem.
double expected_improvement(double mean, double variance, double best) noexcept;

inline constexpr const char* kSearchCsvHeader = "iteration,layers,neurons_csv,score";
void write_search_csv(std::ostream& out, const SearchRecord& record);

}  // namespace ctp
