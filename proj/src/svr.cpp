#include "ctp/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ctp/error.hpp"

namespace ctp {

namespace {

constexpr double kTau = 1e-12;
constexpr double kSupportThreshold = 1e-8;

class DualSolver {
 public:
  DualSolver(std::vector<double> kernel, std::span<const double> targets, double C, double epsilon)
      : n_(targets.size()), k_(std::move(kernel)), c_(C) {
    const std::size_t l = 2 * n_;
    alpha_.assign(l, 0.0);
    grad_.resize(l);
    for (std::size_t i = 0; i < n_; ++i) {
      grad_[i] = epsilon - targets[i];
      grad_[i + n_] = epsilon + targets[i];
    }
  }

  // Returns the iteration count; `violation` receives the final KKT gap.
  std::size_t solve(double tolerance, std::size_t max_iterations, double& violation) {
    std::size_t iter = 0;
    while (iter < max_iterations) {
      std::size_t i = 0, j = 0;
      if (!select_working_set(tolerance, i, j, violation)) return iter;
      update_pair(i, j);
      ++iter;
    }
    std::size_t i = 0, j = 0;
    select_working_set(tolerance, i, j, violation);
    return iter;
  }

  double bias() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      const double yg = sign(t) * grad_[t];
      if (alpha_[t] >= c_) {
        if (sign(t) < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (alpha_[t] <= 0.0) {
        if (sign(t) > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    return -rho;
  }

  double omega(std::size_t i) const { return alpha_[i] - alpha_[i + n_]; }

 private:
  double sign(std::size_t t) const noexcept { return t < n_ ? 1.0 : -1.0; }
  std::size_t sample(std::size_t t) const noexcept { return t < n_ ? t : t - n_; }
  double kern(std::size_t t, std::size_t s) const noexcept { return k_[sample(t) * n_ + sample(s)]; }

  bool select_working_set(double tolerance, std::size_t& out_i, std::size_t& out_j, double& violation) {
    const std::size_t l = 2 * n_;
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t best_i = -1;
    for (std::size_t t = 0; t < l; ++t) {
      if (sign(t) > 0) {
        if (alpha_[t] < c_ && -grad_[t] >= gmax) {
          gmax = -grad_[t];
          best_i = static_cast<std::ptrdiff_t>(t);
        }
      } else if (alpha_[t] > 0.0 && grad_[t] >= gmax) {
        gmax = grad_[t];
        best_i = static_cast<std::ptrdiff_t>(t);
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t best_j = -1;
    double best_obj = std::numeric_limits<double>::infinity();
    const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(best_i, 0));
    for (std::size_t t = 0; t < l; ++t) {
      double grad_diff = 0.0;
      if (sign(t) > 0) {
        if (!(alpha_[t] > 0.0)) continue;
        gmax2 = std::max(gmax2, grad_[t]);
        grad_diff = gmax + grad_[t];
      } else {
        if (!(alpha_[t] < c_)) continue;
        gmax2 = std::max(gmax2, -grad_[t]);
        grad_diff = gmax - grad_[t];
      }
      if (best_i < 0 || grad_diff <= 0.0) continue;
      double quad = kern(i, i) + kern(t, t) - 2.0 * kern(i, t);
      if (quad <= 0.0) quad = kTau;
      const double obj = -(grad_diff * grad_diff) / quad;
      if (obj <= best_obj) {
        best_obj = obj;
        best_j = static_cast<std::ptrdiff_t>(t);
      }
    }
    violation = gmax + gmax2;
    if (best_i < 0 || best_j < 0 || violation < tolerance) return false;
    out_i = i;
    out_j = static_cast<std::size_t>(best_j);
    return true;
  }

  void update_pair(std::size_t i, std::size_t j) {
    const double old_i = alpha_[i];
    const double old_j = alpha_[j];
    double quad = kern(i, i) + kern(j, j) - 2.0 * kern(i, j);
    if (quad <= 0.0) quad = kTau;
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    if (sign(i) != sign(j)) {
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c_) { ai = c_; aj = c_ - diff; }
      } else if (aj > c_) {
        aj = c_;
        ai = c_ + diff;
      }
    } else {
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c_) {
        if (ai > c_) { ai = c_; aj = sum - c_; }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > c_) {
        if (aj > c_) { aj = c_; ai = sum - c_; }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    const double si = sign(i), sj = sign(j);
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      const double st = sign(t);
      grad_[t] += st * (si * kern(t, i) * di + sj * kern(t, j) * dj);
    }
  }

  std::size_t n_;
  std::vector<double> k_;
  double c_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
};

}  // namespace

double default_svr_gamma(std::span<const Vec3> standardized) noexcept {
  double mean = 0.0;
  const double count = 3.0 * static_cast<double>(standardized.size());
  for (const auto& z : standardized) mean += z[0] + z[1] + z[2];
  mean /= count;
  double var = 0.0;
  for (const auto& z : standardized) {
    for (double v : z) var += (v - mean) * (v - mean);
  }
  var /= count;
  return var > 0.0 ? 1.0 / (3.0 * var) : 1.0;
}

double SvrModel::predict_standardized(const Vec3& z) const noexcept {
  double t = bias;
  for (std::size_t i = 0; i < support_inputs.size(); ++i) {
    t += dual_coefficients[i] * rbf_kernel(z, support_inputs[i], gamma);
  }
  return t;
}

SvrModel train_svr(std::span<const Vec3> inputs, std::span<const double> targets,
                   const SvrParams& params) {
  if (inputs.size() != targets.size()) throw Error(Errc::InvalidConfig, "inputs and targets differ in length");
  if (inputs.size() < 10) {
    throw Error(Errc::InsufficientData, "need at least 10 samples, got " + std::to_string(inputs.size()));
  }
  if (!(params.C > 0.0) || !(params.epsilon >= 0.0) || !(params.tolerance > 0.0) ||
      (params.gamma && !(*params.gamma >= 0.0))) {
    throw Error(Errc::InvalidConfig, "invalid SVR parameters");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!std::isfinite(targets[i]) || !std::isfinite(inputs[i][0]) || !std::isfinite(inputs[i][1]) ||
        !std::isfinite(inputs[i][2])) {
      throw Error(Errc::NonFiniteInput, "non-finite value in training row " + std::to_string(i));
    }
  }

  SvrModel model;
  model.C = params.C;
  model.epsilon = params.epsilon;
  model.standardizer = Standardizer::fit(inputs);
  std::vector<Vec3> z(inputs.size());
  std::transform(inputs.begin(), inputs.end(), z.begin(),
                 [&](const Vec3& x) { return model.standardizer.apply(x); });
  model.gamma = params.gamma.value_or(default_svr_gamma(z));

  const std::size_t n = z.size();
  std::vector<double> kernel(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    kernel[a * n + a] = 1.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      const double k = rbf_kernel(z[a], z[b], model.gamma);
      kernel[a * n + b] = k;
      kernel[b * n + a] = k;
    }
  }

  DualSolver solver(std::move(kernel), targets, params.C, params.epsilon);
  model.iterations = solver.solve(params.tolerance, params.max_passes * n, model.final_violation);
  model.bias = solver.bias();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = solver.omega(i);
    if (std::abs(w) > kSupportThreshold) {
      model.support_inputs.push_back(z[i]);
      model.dual_coefficients.push_back(w);
    }
  }
  return model;
}

}  // namespace ctp
