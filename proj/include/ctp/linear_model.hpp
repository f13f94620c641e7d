#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "ctp/features.hpp"

namespace ctp {

enum class LinearTrainer { ElasticNet, Lasso, Ridge, Sgd };

std::string_view to_string(LinearTrainer trainer) noexcept;

inline constexpr std::size_t kLinearWeights = kPolyFeatures - 1;

struct LinearHyperparameters {
  double alpha = 1.0;
  double l1_ratio = 0.5;
  double tolerance = 1e-3;
  std::size_t max_iterations = 10000;
  // Sgd only. The penalty is L2, so l1_ratio and epsilon are carried for the
  // record but do not enter the update.
  double eta = 0.01;
  double epsilon = 0.1;
  std::uint64_t seed = 0;

  static LinearHyperparameters defaults(LinearTrainer trainer) noexcept;

  friend bool operator==(const LinearHyperparameters&, const LinearHyperparameters&) = default;
};

/// Degree-2 polynomial model over standardized counters:
/// t = intercept + sum_k weights[k] * monomial_{k+1}(z).
struct LinearModel {
  LinearTrainer trainer = LinearTrainer::Ridge;
  std::array<double, kLinearWeights> weights{};
  double intercept = 0.0;
  Standardizer standardizer;
  LinearHyperparameters hyperparameters;
  std::size_t iterations = 0;  // sweeps / epochs actually run

  double predict_standardized(const Vec3& z) const noexcept;
  double predict(const Vec3& counters) const noexcept {
    return predict_standardized(standardizer.apply(counters));
  }
  /// All ten coefficients, constant first, in poly2_expand order.
  std::array<double, kPolyFeatures> coefficients() const noexcept;
  /// The same polynomial re-expressed over counters standardized by `target`.
  std::array<double, kPolyFeatures> coefficients_in(const Standardizer& target) const noexcept;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Ridge:      min ||y - Fw - b||^2 + alpha ||w||^2 (closed form).
/// Lasso/EN:   min 1/2 ||y - Fw - b||^2 + alpha l1 ||w||_1 + alpha (1 - l1)/2 ||w||^2
///             by cyclic coordinate descent.
/// Sgd:        per-sample squared loss with an L2 penalty, constant step.
/// F holds the nine non-constant monomials of the standardized inputs.
/// Throws InsufficientData (fewer than 10 samples), NonFiniteInput, NonFiniteLoss.
LinearModel train_linear(LinearTrainer trainer, std::span<const Vec3> inputs,
                         std::span<const double> targets, const LinearHyperparameters& hp);
inline LinearModel train_linear(LinearTrainer trainer, std::span<const Vec3> inputs,
                                std::span<const double> targets) {
  return train_linear(trainer, inputs, targets, LinearHyperparameters::defaults(trainer));
}

}  // namespace ctp
