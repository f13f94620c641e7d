#include "ctp/linear_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ctp/error.hpp"

namespace ctp {

namespace {

// Position of the monomial z_d * z_e (d <= e) in poly2_expand order.
constexpr std::size_t quad_index(std::size_t d, std::size_t e) noexcept {
  constexpr std::size_t table[3][3] = {{4, 5, 6}, {5, 7, 8}, {6, 8, 9}};
  return table[d][e];
}

void check_training_set(std::span<const Vec3> inputs, std::span<const double> targets) {
  if (inputs.size() != targets.size()) {
    throw Error(Errc::InvalidConfig, "inputs and targets differ in length");
  }
  if (inputs.size() < 10) {
    throw Error(Errc::InsufficientData,
                "need at least 10 samples, got " + std::to_string(inputs.size()));
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!std::isfinite(targets[i]) || !std::isfinite(inputs[i][0]) ||
        !std::isfinite(inputs[i][1]) || !std::isfinite(inputs[i][2])) {
      throw Error(Errc::NonFiniteInput, "non-finite value in training row " + std::to_string(i));
    }
  }
}

// n x 9 matrix of non-constant monomials of the standardized inputs.
Eigen::MatrixXd feature_matrix(std::span<const Vec3> inputs, const Standardizer& s) {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(inputs.size()), kLinearWeights);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto m = poly2_expand(s.apply(inputs[i]));
    for (std::size_t k = 0; k < kLinearWeights; ++k) {
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = m[k + 1];
    }
  }
  return f;
}

double soft_threshold(double value, double threshold) noexcept {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

void fit_ridge(LinearModel& model, const Eigen::MatrixXd& f, const Eigen::VectorXd& y) {
  const Eigen::RowVectorXd f_mean = f.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd fc = f.rowwise() - f_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::MatrixXd gram = fc.transpose() * fc;
  gram.diagonal().array() += model.hyperparameters.alpha;
  const Eigen::VectorXd w = gram.ldlt().solve(fc.transpose() * yc);
  for (std::size_t k = 0; k < kLinearWeights; ++k) model.weights[k] = w(static_cast<Eigen::Index>(k));
  model.intercept = y_mean - f_mean.dot(w);
  model.iterations = 1;
}

void fit_coordinate_descent(LinearModel& model, const Eigen::MatrixXd& f, const Eigen::VectorXd& y,
                            double l1_ratio) {
  const auto& hp = model.hyperparameters;
  const Eigen::RowVectorXd f_mean = f.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd fc = f.rowwise() - f_mean;
  const Eigen::VectorXd col_sq = fc.colwise().squaredNorm();
  const double l1 = hp.alpha * l1_ratio;
  const double l2 = hp.alpha * (1.0 - l1_ratio);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(kLinearWeights);
  Eigen::VectorXd residual = y.array() - y_mean;
  std::size_t sweep = 0;
  while (sweep < hp.max_iterations) {
    ++sweep;
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kLinearWeights); ++j) {
      const double old = w(j);
      double updated = 0.0;
      if (col_sq(j) > 0.0) {
        const double rho = fc.col(j).dot(residual) + col_sq(j) * old;
        updated = soft_threshold(rho, l1) / (col_sq(j) + l2);
      }
      if (updated != old) {
        residual -= (updated - old) * fc.col(j);
        w(j) = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    if (max_change < hp.tolerance) break;
  }
  for (std::size_t k = 0; k < kLinearWeights; ++k) model.weights[k] = w(static_cast<Eigen::Index>(k));
  model.intercept = y_mean - f_mean.dot(w);
  model.iterations = sweep;
}

void fit_sgd(LinearModel& model, const Eigen::MatrixXd& f, const Eigen::VectorXd& y) {
  const auto& hp = model.hyperparameters;
  const auto n = static_cast<std::size_t>(f.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(hp.seed);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(kLinearWeights);
  double b = 0.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;
  constexpr std::size_t kPatience = 5;
  std::size_t epoch = 0;
  while (epoch < hp.max_iterations) {
    ++epoch;
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    for (auto i : order) {
      const auto row = f.row(static_cast<Eigen::Index>(i));
      const double residual = row.dot(w) + b - y(static_cast<Eigen::Index>(i));
      loss += 0.5 * residual * residual;
      w = (1.0 - hp.eta * hp.alpha) * w - hp.eta * residual * row.transpose();
      b -= hp.eta * residual;
    }
    loss = loss / static_cast<double>(n) + 0.5 * hp.alpha * w.squaredNorm();
    if (!std::isfinite(loss) || !w.allFinite() || !std::isfinite(b)) {
      throw Error(Errc::NonFiniteLoss, "SGD diverged at epoch " + std::to_string(epoch));
    }
    if (loss > best_loss - hp.tolerance) {
      if (++stale_epochs >= kPatience) break;
    } else {
      stale_epochs = 0;
    }
    best_loss = std::min(best_loss, loss);
  }
  for (std::size_t k = 0; k < kLinearWeights; ++k) model.weights[k] = w(static_cast<Eigen::Index>(k));
  model.intercept = b;
  model.iterations = epoch;
}

}  // namespace

std::string_view to_string(LinearTrainer trainer) noexcept {
  switch (trainer) {
    case LinearTrainer::ElasticNet: return "elasticnet";
    case LinearTrainer::Lasso: return "lasso";
    case LinearTrainer::Ridge: return "ridge";
    case LinearTrainer::Sgd: return "sgd";
  }
  return "?";
}

LinearHyperparameters LinearHyperparameters::defaults(LinearTrainer trainer) noexcept {
  LinearHyperparameters hp;
  switch (trainer) {
    case LinearTrainer::ElasticNet:
      hp.l1_ratio = 0.5;
      break;
    case LinearTrainer::Lasso:
      hp.l1_ratio = 1.0;
      break;
    case LinearTrainer::Ridge:
      hp.l1_ratio = 0.0;
      break;
    case LinearTrainer::Sgd:
      hp.alpha = 0.0001;
      hp.l1_ratio = 0.15;
      hp.epsilon = 0.1;
      hp.eta = 0.01;
      break;
  }
  return hp;
}

double LinearModel::predict_standardized(const Vec3& z) const noexcept {
  const auto m = poly2_expand(z);
  double t = intercept;
  for (std::size_t k = 0; k < kLinearWeights; ++k) t += weights[k] * m[k + 1];
  return t;
}

std::array<double, kPolyFeatures> LinearModel::coefficients() const noexcept {
  std::array<double, kPolyFeatures> c{};
  c[0] = intercept;
  std::copy(weights.begin(), weights.end(), c.begin() + 1);
  return c;
}

std::array<double, kPolyFeatures> LinearModel::coefficients_in(const Standardizer& target) const noexcept {
  // Own standardized coordinate z_d = shift_d + scale_d * u_d, where u is the
  // coordinate under `target`.
  Vec3 shift{}, scale{};
  for (std::size_t d = 0; d < 3; ++d) {
    shift[d] = (target.means[d] - standardizer.means[d]) / standardizer.stds[d];
    scale[d] = target.stds[d] / standardizer.stds[d];
  }
  const auto c = coefficients();
  std::array<double, kPolyFeatures> out{};
  out[0] = c[0];
  for (std::size_t d = 0; d < 3; ++d) {
    out[0] += c[1 + d] * shift[d];
    out[1 + d] += c[1 + d] * scale[d];
  }
  for (std::size_t d = 0; d < 3; ++d) {
    for (std::size_t e = d; e < 3; ++e) {
      const double q = c[quad_index(d, e)];
      out[0] += q * shift[d] * shift[e];
      out[1 + d] += q * shift[e] * scale[d];
      out[1 + e] += q * shift[d] * scale[e];
      out[quad_index(d, e)] += q * scale[d] * scale[e];
    }
  }
  return out;
}

LinearModel train_linear(LinearTrainer trainer, std::span<const Vec3> inputs,
                         std::span<const double> targets, const LinearHyperparameters& hp) {
  check_training_set(inputs, targets);
  if (!(hp.alpha >= 0.0) || !(hp.tolerance > 0.0) || hp.max_iterations == 0 ||
      !(hp.l1_ratio >= 0.0 && hp.l1_ratio <= 1.0)) {
    throw Error(Errc::InvalidConfig, "invalid linear-model hyperparameters");
  }
  LinearModel model;
  model.trainer = trainer;
  model.hyperparameters = hp;
  model.standardizer = Standardizer::fit(inputs);
  const Eigen::MatrixXd f = feature_matrix(inputs, model.standardizer);
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
  switch (trainer) {
    case LinearTrainer::Ridge: fit_ridge(model, f, y); break;
    case LinearTrainer::Lasso: fit_coordinate_descent(model, f, y, 1.0); break;
    case LinearTrainer::ElasticNet: fit_coordinate_descent(model, f, y, hp.l1_ratio); break;
    case LinearTrainer::Sgd: fit_sgd(model, f, y); break;
  }
  return model;
}

}  // namespace ctp
