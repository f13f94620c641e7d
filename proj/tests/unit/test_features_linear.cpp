#include <cmath>
#include <numeric>
#include <random>

#include "ctp/error.hpp"
#include "ctp/features.hpp"
#include "ctp/linear_model.hpp"
#include "ctp/synthlab.hpp"
#include "support.hpp"

using namespace ctp;

namespace {

struct Data {
  std::vector<Vec3> x;
  std::vector<double> y;
};

Data synth(const SynthSpec& spec) {
  const Dataset d = gen_synth_dataset(spec);
  Data out;
  for (const auto& s : d.samples()) {
    out.x.push_back(s.contention.counters());
    out.y.push_back(s.t_app);
  }
  return out;
}

double weight_norm(const LinearModel& m) {
  return std::sqrt(std::inner_product(m.weights.begin(), m.weights.end(), m.weights.begin(), 0.0));
}

}  // namespace

TEST(Poly2, Examples) {
  EXPECT_EQ(poly2_expand({0, 0, 0}), (std::array<double, 10>{1, 0, 0, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(poly2_expand({1, 1, 1}), (std::array<double, 10>{1, 1, 1, 1, 1, 1, 1, 1, 1, 1}));
  // a=2, b=3, c=4: 1, a, b, c, aa, ab, ac, bb, bc, cc
  EXPECT_EQ(poly2_expand({2, 3, 4}), (std::array<double, 10>{1, 2, 3, 4, 4, 6, 8, 9, 12, 16}));
  static_assert(poly2_expand({2, 3, 4})[8] == 12.0);
}

TEST(Standardizer, DegenerateDimensionGetsUnitStd) {
  const std::vector<Vec3> one = {{1, 1, 1}};
  const auto s = Standardizer::fit(one);
  EXPECT_EQ(s.stds, (Vec3{1, 1, 1}));
  EXPECT_TRUE(s.any_degenerate());
  EXPECT_EQ(s.apply({1, 1, 1}), (Vec3{0, 0, 0}));
}

TEST(Standardizer, PopulationStatistics) {
  const std::vector<Vec3> two = {{0, 0, 0}, {2, 2, 2}};
  const auto s = Standardizer::fit(two);
  EXPECT_EQ(s.means, (Vec3{1, 1, 1}));
  EXPECT_EQ(s.stds, (Vec3{1, 1, 1}));
  EXPECT_FALSE(s.any_degenerate());
  EXPECT_EQ(s.apply({2, 2, 2}), (Vec3{1, 1, 1}));
  EXPECT_CTP_ERROR(Standardizer::fit(std::vector<Vec3>{}), Errc::EmptyInput);
}

TEST(Standardizer, InvertUndoesApply) {
  const std::vector<Vec3> xs = {{3e9, 1e8, 4e4}, {5e9, 3e8, 7e4}, {4e9, 2e8, 1e4}};
  const auto s = Standardizer::fit(xs);
  for (const auto& x : xs) {
    const auto back = s.invert(s.apply(x));
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(back[d], x[d], 1e-6 * std::abs(x[d]));
  }
}

TEST(RbfKernel, Examples) {
  EXPECT_EQ(rbf_kernel({1, 2, 3}, {-4, 5, 0.5}, 0.0), 1.0);
  EXPECT_NEAR(rbf_kernel({1, 0, 0}, {0, 0, 0}, 1.0), 0.367879, 1e-6);
  EXPECT_EQ(rbf_kernel({1, 2, 3}, {1, 2, 3}, 7.0), 1.0);
  const double k = rbf_kernel({1, 2, 3}, {0, 0, 0}, 0.5);
  EXPECT_GT(k, 0.0);
  EXPECT_LE(k, 1.0);
}

TEST(Ridge, FitsExactLineWithTinyPenalty) {
  // y = 2a + 3 over 20 points with b and c held fixed.
  std::vector<Vec3> x;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back({static_cast<double>(i + 1), 7.0, 11.0});
    y.push_back(2.0 * (i + 1) + 3.0);
  }
  // Independent oracle: ordinary least squares of y on a.
  const double n = 20.0;
  double sa = 0, sy = 0, saa = 0, say = 0;
  for (int i = 0; i < 20; ++i) {
    sa += x[i][0];
    sy += y[i];
    saa += x[i][0] * x[i][0];
    say += x[i][0] * y[i];
  }
  const double slope = (n * say - sa * sy) / (n * saa - sa * sa);
  const double icpt = (sy - slope * sa) / n;

  auto hp = LinearHyperparameters::defaults(LinearTrainer::Ridge);
  hp.alpha = 1e-8;
  const auto m = train_linear(LinearTrainer::Ridge, x, y, hp);
  for (int i = 0; i < 20; ++i) {
    const double oracle = slope * x[i][0] + icpt;
    EXPECT_LT(std::abs(m.predict(x[i]) - oracle) / oracle, 1e-3);
    EXPECT_LT(std::abs(m.predict(x[i]) - y[i]) / y[i], 1e-3);
  }
}

TEST(Ridge, HugePenaltyShrinksToTheMean) {
  const Data d = synth(SynthSpec::polynomial_default());
  auto hp = LinearHyperparameters::defaults(LinearTrainer::Ridge);
  hp.alpha = 1e9;
  const auto m = train_linear(LinearTrainer::Ridge, d.x, d.y, hp);
  for (double w : m.weights) EXPECT_NEAR(w, 0.0, 1e-3);
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(d.y.size());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(m.predict(d.x[i]), mean, 1e-3 * mean);
}

TEST(Ridge, WeightNormShrinksAsAlphaGrows) {
  auto spec = SynthSpec::polynomial_default();
  spec.n = 300;
  const Data d = synth(spec);
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {1e-4, 1.0, 1e4}) {
    auto hp = LinearHyperparameters::defaults(LinearTrainer::Ridge);
    hp.alpha = alpha;
    const double norm = weight_norm(train_linear(LinearTrainer::Ridge, d.x, d.y, hp));
    EXPECT_LE(norm, prev);
    prev = norm;
  }
}

TEST(Ridge, RecoversNoiseFreeOracleCoefficients) {
  auto spec = SynthSpec::polynomial_default();
  spec.noise_sigma = 0.0;
  const Data d = synth(spec);
  auto hp = LinearHyperparameters::defaults(LinearTrainer::Ridge);
  hp.alpha = 1e-8;
  const auto m = train_linear(LinearTrainer::Ridge, d.x, d.y, hp);
  const auto got = m.coefficients_in(spec.truth_standardizer());
  for (std::size_t k = 0; k < kPolyFeatures; ++k) EXPECT_NEAR(got[k], spec.coefficients[k], 1e-3) << k;
}

TEST(Lasso, LargePenaltyZeroesEveryWeight) {
  auto spec = SynthSpec::polynomial_default();
  spec.n = 200;
  const Data d = synth(spec);
  auto hp = LinearHyperparameters::defaults(LinearTrainer::Lasso);
  hp.alpha = 1e6;
  const auto m = train_linear(LinearTrainer::Lasso, d.x, d.y, hp);
  for (double w : m.weights) EXPECT_EQ(w, 0.0);
}

TEST(CoordinateDescent, SolutionSatisfiesOptimalityConditions) {
  // Subgradient conditions of 1/2||r||^2 + a*l1*|w|_1 + a*(1-l1)/2*||w||^2,
  // checked directly from the residuals.
  auto spec = SynthSpec::polynomial_default();
  spec.n = 400;
  spec.noise_sigma = 0.05;
  const Data d = synth(spec);
  for (auto trainer : {LinearTrainer::Lasso, LinearTrainer::ElasticNet}) {
    auto hp = LinearHyperparameters::defaults(trainer);
    hp.alpha = 50.0;
    hp.tolerance = 1e-10;
    hp.max_iterations = 100000;
    const auto m = train_linear(trainer, d.x, d.y, hp);
    std::array<double, kLinearWeights> grad{};
    double residual_sum = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
      const auto f = poly2_expand(m.standardizer.apply(d.x[i]));
      const double r = d.y[i] - m.predict(d.x[i]);
      residual_sum += r;
      for (std::size_t j = 0; j < kLinearWeights; ++j) grad[j] += f[j + 1] * r;
    }
    EXPECT_NEAR(residual_sum, 0.0, 1e-6 * static_cast<double>(d.x.size()));
    const double l1 = hp.alpha * hp.l1_ratio;
    const double l2 = hp.alpha * (1.0 - hp.l1_ratio);
    int zeros = 0;
    for (std::size_t j = 0; j < kLinearWeights; ++j) {
      const double w = m.weights[j];
      if (w == 0.0) {
        ++zeros;
        EXPECT_LE(std::abs(grad[j]), l1 + 1e-4) << j;
      } else {
        EXPECT_NEAR(grad[j], l1 * (w > 0 ? 1.0 : -1.0) + l2 * w, 1e-4) << j;
      }
    }
    EXPECT_LT(zeros, 9);
  }
}

TEST(Linear, DefaultsMatchDocumentedValues) {
  for (auto t : {LinearTrainer::ElasticNet, LinearTrainer::Lasso, LinearTrainer::Ridge}) {
    const auto hp = LinearHyperparameters::defaults(t);
    EXPECT_EQ(hp.alpha, 1.0);
    EXPECT_EQ(hp.tolerance, 1e-3);
    EXPECT_EQ(hp.max_iterations, 10000u);
  }
  const auto sgd = LinearHyperparameters::defaults(LinearTrainer::Sgd);
  EXPECT_EQ(sgd.alpha, 1e-4);
  EXPECT_EQ(sgd.l1_ratio, 0.15);
  EXPECT_EQ(sgd.epsilon, 0.1);
  EXPECT_EQ(sgd.eta, 0.01);
}

TEST(Linear, AllTrainersFitThePolynomialOracle) {
  const Data d = synth(SynthSpec::polynomial_default());
  for (auto t : {LinearTrainer::ElasticNet, LinearTrainer::Lasso, LinearTrainer::Ridge, LinearTrainer::Sgd}) {
    const auto m = train_linear(t, d.x, d.y);
    double err = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) err += std::abs(m.predict(d.x[i]) - d.y[i]) / d.y[i];
    EXPECT_LT(err / static_cast<double>(d.x.size()), 0.05) << to_string(t);
  }
}

TEST(Linear, SgdIsDeterministicPerSeed) {
  auto spec = SynthSpec::polynomial_default();
  spec.n = 200;
  const Data d = synth(spec);
  auto hp = LinearHyperparameters::defaults(LinearTrainer::Sgd);
  hp.seed = 5;
  EXPECT_EQ(train_linear(LinearTrainer::Sgd, d.x, d.y, hp), train_linear(LinearTrainer::Sgd, d.x, d.y, hp));
}

TEST(Linear, ScalingCountersLeavesPredictionsUnchanged) {
  auto spec = SynthSpec::polynomial_default();
  spec.n = 200;
  const Data d = synth(spec);
  std::vector<Vec3> scaled = d.x;
  for (auto& v : scaled)
    for (auto& c : v) c *= 8.0;
  for (auto t : {LinearTrainer::ElasticNet, LinearTrainer::Lasso, LinearTrainer::Ridge, LinearTrainer::Sgd}) {
    const auto a = train_linear(t, d.x, d.y);
    const auto b = train_linear(t, scaled, d.y);
    for (std::size_t i = 0; i < 20; ++i) {
      EXPECT_NEAR(a.predict(d.x[i]), b.predict(scaled[i]), 1e-6 * std::abs(a.predict(d.x[i]))) << to_string(t);
    }
  }
}

TEST(Linear, CoefficientsInAnotherBasisPredictIdentically) {
  auto spec = SynthSpec::polynomial_default();
  spec.n = 200;
  const Data d = synth(spec);
  const auto m = train_linear(LinearTrainer::Ridge, d.x, d.y);
  const Standardizer other = spec.truth_standardizer();
  const auto c = m.coefficients_in(other);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto f = poly2_expand(other.apply(d.x[i]));
    const double p = std::inner_product(c.begin(), c.end(), f.begin(), 0.0);
    EXPECT_NEAR(p, m.predict(d.x[i]), 1e-9 * std::abs(p));
  }
}

TEST(Linear, ZeroWeightModelPredictsItsIntercept) {
  LinearModel m;
  m.intercept = 7.0;
  EXPECT_EQ(m.predict({1e9, 2e8, 3e4}), 7.0);
  EXPECT_EQ(m.predict({0, 0, 0}), 7.0);
}

TEST(Linear, InputErrors) {
  std::vector<Vec3> x(9, Vec3{1, 2, 3});
  std::vector<double> y(9, 1.0);
  EXPECT_CTP_ERROR(train_linear(LinearTrainer::Ridge, x, y), Errc::InsufficientData);
  x.resize(12, Vec3{1, 2, 3});
  y.resize(12, 1.0);
  x[3][1] = std::numeric_limits<double>::infinity();
  EXPECT_CTP_ERROR(train_linear(LinearTrainer::Ridge, x, y), Errc::NonFiniteInput);
}

TEST(Sgd, DivergenceIsReported) {
  const Data d = synth(SynthSpec::polynomial_default());
  auto hp = LinearHyperparameters::defaults(LinearTrainer::Sgd);
  hp.eta = 10.0;
  EXPECT_CTP_ERROR(train_linear(LinearTrainer::Sgd, d.x, d.y, hp), Errc::NonFiniteLoss);
}
