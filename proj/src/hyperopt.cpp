#include "ctp/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>

#include "ctp/dataset.hpp"
#include "ctp/error.hpp"
#include "ctp/metrics.hpp"

namespace ctp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double evaluate(const Objective& objective, const NNConfig& config) {
  try {
    const double score = objective(config);
    return std::isnan(score) ? kInf : score;
  } catch (const Error& e) {
    if (e.code() == Errc::NonFiniteLoss) return kInf;
    throw;
  }
}

void record(SearchRecord& rec, NNConfig config, double score) {
  rec.history.push_back({std::move(config), score});
  if (rec.history.size() == 1 || score < rec.history[rec.best].score) rec.best = rec.history.size() - 1;
}

void check_budget(std::size_t budget, std::size_t init_points) {
  if (budget == 0) throw Error(Errc::InvalidConfig, "search budget must be >= 1");
  if (budget <= init_points) {
    throw Error(Errc::InvalidConfig, "search budget must exceed the " + std::to_string(init_points) +
                                         " initial points");
  }
}

}  // namespace

// ------------------------------------------------------------- SearchSpace

bool SearchSpace::contains(const NNConfig& c) const noexcept {
  if (c.hidden_layers() < min_layers || c.hidden_layers() > max_layers) return false;
  return std::all_of(c.neurons.begin(), c.neurons.end(),
                     [&](int n) { return n >= min_neurons && n <= max_neurons; });
}

NNConfig SearchSpace::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> layers(min_layers, max_layers);
  std::uniform_int_distribution<int> width(min_neurons, max_neurons);
  std::vector<int> neurons(static_cast<std::size_t>(layers(rng)));
  for (auto& n : neurons) n = width(rng);
  NNConfig c;
  c.neurons = std::move(neurons);
  return c;
}

std::array<double, 6> SearchSpace::encode(const NNConfig& c) const noexcept {
  std::array<double, 6> e{};
  const double layer_span = std::max(1, max_layers - min_layers);
  e[0] = static_cast<double>(c.hidden_layers() - min_layers) / layer_span;
  for (std::size_t k = 0; k < c.neurons.size() && k < 5; ++k) {
    e[k + 1] = static_cast<double>(c.neurons[k]) / static_cast<double>(max_neurons);
  }
  return e;
}

// ---------------------------------------------------------------- objective

double training_mape(const NNConfig& config, std::span<const Vec3> inputs, std::span<const double> targets,
                     const MlpTrainOptions& options) {
  MlpModel model;
  try {
    model = train_mlp(inputs, targets, config, options);
  } catch (const Error& e) {
    if (e.code() == Errc::NonFiniteLoss) return kInf;
    throw;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double p = model.predict(inputs[i]);
    if (!std::isfinite(p)) return kInf;
    total += ape(targets[i], p);
  }
  return total / static_cast<double>(inputs.size());
}

// ------------------------------------------------------------ random search

SearchRecord random_search(const SearchSpace& space, std::size_t budget, const Objective& objective,
                           std::uint64_t seed) {
  if (budget == 0) throw Error(Errc::InvalidConfig, "search budget must be >= 1");
  std::mt19937_64 rng(seed);
  SearchRecord rec;
  rec.budget = budget;
  for (std::size_t i = 0; i < budget; ++i) {
    NNConfig c = space.sample(rng);
    const double score = evaluate(objective, c);
    record(rec, std::move(c), score);
  }
  return rec;
}

// ------------------------------------------------------------------- GP

GaussianProcess::GaussianProcess(Eigen::MatrixXd points, Eigen::VectorXd values, double length_scale,
                                 double noise)
    : points_(std::move(points)), length_scale_(length_scale), noise_(noise) {
  const Eigen::Index n = points_.rows();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double k = kernel(points_.row(i).transpose(), points_.row(j).transpose());
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  for (;;) {
    Eigen::MatrixXd jittered = gram;
    jittered.diagonal().array() += noise_;
    chol_.compute(jittered);
    if (chol_.info() == Eigen::Success) break;
    if (noise_ >= 1e-2) throw Error(Errc::DegenerateGram, "GP Gram matrix is not positive definite");
    noise_ = noise_ > 0.0 ? std::min(noise_ * 10.0, 1e-2) : 1e-10;
  }
  weights_ = chol_.solve(values);
  const Eigen::MatrixXd l = chol_.matrixL();
  log_ml_ = -0.5 * values.dot(weights_) - l.diagonal().array().log().sum() -
            0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

double GaussianProcess::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  return std::exp(-(a - b).squaredNorm() / (2.0 * length_scale_ * length_scale_));
}

GaussianProcess GaussianProcess::fit_ml(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                                        std::span<const double> grid, double noise) {
  if (grid.empty()) throw Error(Errc::InvalidConfig, "empty length-scale grid");
  std::optional<GaussianProcess> best;
  for (double ls : grid) {
    GaussianProcess gp(points, values, ls, noise);
    if (!best || gp.log_marginal_likelihood() > best->log_marginal_likelihood()) best = std::move(gp);
  }
  return std::move(*best);
}

GaussianProcess::Posterior GaussianProcess::predict(const Eigen::VectorXd& x) const {
  Eigen::VectorXd k(points_.rows());
  for (Eigen::Index i = 0; i < points_.rows(); ++i) k(i) = kernel(points_.row(i).transpose(), x);
  const double mean = k.dot(weights_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k);
  const double var = std::max(0.0, 1.0 - v.squaredNorm());
  return {mean, var};
}

double expected_improvement(double mean, double variance, double best) noexcept {
  const double sigma = std::sqrt(variance);
  const double gain = best - mean;
  if (sigma < 1e-12) return std::max(0.0, gain);
  const double z = gain / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return gain * cdf + sigma * pdf;
}

// -------------------------------------------------------------- Bayesian

SearchRecord bayes_opt(const SearchSpace& space, std::size_t budget, const Objective& objective,
                       std::uint64_t seed, const BayesOptions& options) {
  check_budget(budget, options.init_points);
  static constexpr double kLengthScales[] = {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0};
  std::mt19937_64 rng(seed);
  SearchRecord rec;
  rec.budget = budget;
  for (std::size_t i = 0; i < options.init_points; ++i) {
    NNConfig c = space.sample(rng);
    const double score = evaluate(objective, c);
    record(rec, std::move(c), score);
  }
  while (rec.history.size() < budget) {
    const auto n = static_cast<Eigen::Index>(rec.history.size());
    // Divergent entries are modeled as the worst finite score seen so far.
    double worst = -kInf;
    for (const auto& e : rec.history) {
      if (std::isfinite(e.score)) worst = std::max(worst, e.score);
    }
    if (!std::isfinite(worst)) worst = 1.0;
    Eigen::MatrixXd points(n, 6);
    Eigen::VectorXd values(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& e = rec.history[static_cast<std::size_t>(i)];
      const auto enc = space.encode(e.config);
      for (Eigen::Index d = 0; d < 6; ++d) points(i, d) = enc[static_cast<std::size_t>(d)];
      values(i) = std::isfinite(e.score) ? e.score : worst;
    }
    const double mean = values.mean();
    const double sd = std::sqrt((values.array() - mean).square().mean());
    const double scale = sd > 0.0 ? sd : 1.0;
    const Eigen::VectorXd scaled = (values.array() - mean) / scale;
    const auto gp = GaussianProcess::fit_ml(points, scaled, kLengthScales);
    const double best = scaled.minCoeff();

    NNConfig chosen;
    double chosen_ei = -1.0;
    for (std::size_t k = 0; k < options.candidates; ++k) {
      NNConfig c = space.sample(rng);
      const auto enc = space.encode(c);
      const auto post = gp.predict(Eigen::Map<const Eigen::VectorXd>(enc.data(), 6));
      const double ei = expected_improvement(post.mean, post.variance, best);
      if (ei > chosen_ei) {
        chosen_ei = ei;
        chosen = std::move(c);
      }
    }
    const double score = evaluate(objective, chosen);
    record(rec, std::move(chosen), score);
  }
  return rec;
}

// ------------------------------------------------------------------- TPE

namespace {

// Laplace-smoothed histogram over the integer range [lo, hi].
class Histogram {
 public:
  Histogram(int lo, int hi) : lo_(lo), counts_(static_cast<std::size_t>(hi - lo + 1), 1.0),
                              total_(static_cast<double>(hi - lo + 1)) {}

  void add(int value) {
    counts_[static_cast<std::size_t>(value - lo_)] += 1.0;
    total_ += 1.0;
  }
  double density(int value) const { return counts_[static_cast<std::size_t>(value - lo_)] / total_; }
  int sample(std::mt19937_64& rng) const {
    std::discrete_distribution<int> dist(counts_.begin(), counts_.end());
    return lo_ + dist(rng);
  }

 private:
  int lo_;
  std::vector<double> counts_;
  double total_;
};

struct ParzenModel {
  Histogram layers;
  std::vector<Histogram> widths;  // one per layer slot

  explicit ParzenModel(const SearchSpace& space) : layers(space.min_layers, space.max_layers) {
    for (int s = 0; s < space.max_layers; ++s) widths.emplace_back(space.min_neurons, space.max_neurons);
  }
  void add(const NNConfig& c) {
    layers.add(c.hidden_layers());
    for (std::size_t s = 0; s < c.neurons.size(); ++s) widths[s].add(c.neurons[s]);
  }
  double log_density(const NNConfig& c) const {
    double d = std::log(layers.density(c.hidden_layers()));
    for (std::size_t s = 0; s < c.neurons.size(); ++s) d += std::log(widths[s].density(c.neurons[s]));
    return d;
  }
  NNConfig sample(std::mt19937_64& rng) const {
    NNConfig c;
    c.neurons.resize(static_cast<std::size_t>(layers.sample(rng)));
    for (std::size_t s = 0; s < c.neurons.size(); ++s) c.neurons[s] = widths[s].sample(rng);
    return c;
  }
};

}  // namespace

SearchRecord tpe_search(const SearchSpace& space, std::size_t budget, const Objective& objective,
                        std::uint64_t seed, const TpeOptions& options) {
  check_budget(budget, options.init_points);
  if (!(options.gamma_quantile > 0.0 && options.gamma_quantile < 1.0)) {
    throw Error(Errc::InvalidConfig, "TPE quantile must be in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  SearchRecord rec;
  rec.budget = budget;
  for (std::size_t i = 0; i < options.init_points; ++i) {
    NNConfig c = space.sample(rng);
    const double score = evaluate(objective, c);
    record(rec, std::move(c), score);
  }
  while (rec.history.size() < budget) {
    std::vector<std::size_t> order(rec.history.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return rec.history[a].score < rec.history[b].score; });
    const double lowest = rec.history[order.front()].score;
    const double highest = rec.history[order.back()].score;

    NNConfig next;
    if (lowest == highest) {
      // No ordering information: fall back to uniform sampling.
      next = space.sample(rng);
    } else {
      const auto n_good = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(options.gamma_quantile * static_cast<double>(order.size()))));
      ParzenModel good(space), bad(space);
      for (std::size_t r = 0; r < order.size(); ++r) {
        (r < n_good ? good : bad).add(rec.history[order[r]].config);
      }
      double best_ratio = -kInf;
      for (std::size_t k = 0; k < options.candidates; ++k) {
        NNConfig c = good.sample(rng);
        const double ratio = good.log_density(c) - bad.log_density(c);
        if (ratio > best_ratio) {
          best_ratio = ratio;
          next = std::move(c);
        }
      }
    }
    const double score = evaluate(objective, next);
    record(rec, std::move(next), score);
  }
  return rec;
}

void write_search_csv(std::ostream& out, const SearchRecord& record) {
  out << kSearchCsvHeader << '\n';
  for (std::size_t i = 0; i < record.history.size(); ++i) {
    const auto& e = record.history[i];
    std::string widths;
    for (std::size_t k = 0; k < e.config.neurons.size(); ++k) {
      if (k) widths += ',';
      widths += std::to_string(e.config.neurons[k]);
    }
    out << i << ',' << e.config.hidden_layers() << ",\"" << widths << "\",";
    if (std::isfinite(e.score)) {
      out << format_seconds(e.score);
    } else {
      out << "inf";
    }
    out << '\n';
  }
}

}  // namespace ctp
