#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "ctp/contention.hpp"
#include "ctp/dataset.hpp"
#include "ctp/linear_model.hpp"
#include "ctp/mlp.hpp"
#include "ctp/svr.hpp"

namespace ctp {

enum class ModelKind { ElasticNet, Lasso, Ridge, Sgd, Svr, Mlp };

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts elasticnet, lasso, ridge, sgd, svr, mlp. Throws InvalidConfig.
ModelKind parse_model_kind(std::string_view text);

struct TrainingMetadata {
  std::size_t sample_count = 0;
  double trained_at = 0.0;  // unix seconds of the newest training sample

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

/// A trained predictor of execution seconds from a contention vector.
class PredictiveModel {
 public:
  using Body = std::variant<LinearModel, SvrModel, MlpModel>;

  PredictiveModel(Body body, TrainingMetadata metadata);

  ModelKind kind() const noexcept;
  const Body& body() const noexcept { return body_; }
  const TrainingMetadata& metadata() const noexcept { return metadata_; }

  /// Throws NonFiniteOutput.
  double predict(const Vec3& counters) const;
  double predict(const ContentionVector& v) const { return predict(v.counters()); }

  friend bool operator==(const PredictiveModel&, const PredictiveModel&) = default;

 private:
  Body body_;
  TrainingMetadata metadata_;
};

inline double predict(const PredictiveModel& model, const ContentionVector& v) { return model.predict(v); }

std::vector<Vec3> inputs_of(const Dataset& dataset);
std::vector<double> targets_of(const Dataset& dataset);

struct TrainOptions {
  std::optional<LinearHyperparameters> linear;  // default: the trainer's defaults
  SvrParams svr;
  NNConfig mlp_config{std::vector<int>{16, 16}};
  MlpTrainOptions mlp;
};

/// Trains any model family on every sample of `dataset`.
PredictiveModel train_model(ModelKind kind, const Dataset& dataset, const TrainOptions& options = {});

inline constexpr std::string_view kModelFormat = "ctp-model";
inline constexpr int kModelVersion = 1;

/// Versioned JSON text. Throws VersionMismatch / ParseFailure on read.
std::string model_to_json(const PredictiveModel& model);
PredictiveModel model_from_json(std::string_view text);
void save_model(const PredictiveModel& model, const std::filesystem::path& path);
PredictiveModel load_model(const std::filesystem::path& path);

}  // namespace ctp
