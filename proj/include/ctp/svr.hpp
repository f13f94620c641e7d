#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ctp/features.hpp"

namespace ctp {

struct SvrParams {
  double C = 1000.0;
  double epsilon = 0.1;
  std::optional<double> gamma;  // default: 1 / (3 * variance of standardized inputs)
  double tolerance = 1e-3;      // maximal KKT violation at convergence
  std::size_t max_passes = 10000;  // iteration cap = max_passes * sample count
};

/// Epsilon-insensitive support vector regression with a Gaussian kernel:
/// t(x) = sum_i omega_i * K(z(x), l_i) + bias.
struct SvrModel {
  std::vector<Vec3> support_inputs;  // standardized
  std::vector<double> dual_coefficients;
  double bias = 0.0;
  double gamma = 1.0;
  double C = 1000.0;
  double epsilon = 0.1;
  Standardizer standardizer;
  std::size_t iterations = 0;
  double final_violation = 0.0;

  double predict_standardized(const Vec3& z) const noexcept;
  double predict(const Vec3& counters) const noexcept {
    return predict_standardized(standardizer.apply(counters));
  }

  friend bool operator==(const SvrModel&, const SvrModel&) = default;
};

/// The gamma default computed from already standardized inputs.
double default_svr_gamma(std::span<const Vec3> standardized) noexcept;

/// SMO on the 2n-variable dual with second-order working-set selection.
/// Throws InsufficientData, NonFiniteInput, InvalidConfig.
SvrModel train_svr(std::span<const Vec3> inputs, std::span<const double> targets,
                   const SvrParams& params = {});

}  // namespace ctp
