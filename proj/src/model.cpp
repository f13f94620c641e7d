#include "ctp/model.hpp"

#include <cmath>
#include <fstream>
#include <algorithm>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ctp/error.hpp"

namespace ctp {

using nlohmann::json;

namespace {

json standardizer_json(const Standardizer& s) {
  return {{"means", s.means}, {"stds", s.stds}, {"degenerate", s.degenerate}};
}

Standardizer standardizer_from(const json& j) {
  Standardizer s;
  s.means = j.at("means").get<Vec3>();
  s.stds = j.at("stds").get<Vec3>();
  s.degenerate = j.at("degenerate").get<std::array<bool, 3>>();
  for (double sd : s.stds) {
    if (!(sd > 0.0)) throw Error(Errc::ParseFailure, "standardizer std must be > 0");
  }
  return s;
}

json vec3_list(const std::vector<Vec3>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(x);
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw Error(Errc::ParseFailure, "weight matrix has the wrong number of rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(Errc::ParseFailure, "weight matrix has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json body_json(const LinearModel& m) {
  const auto& hp = m.hyperparameters;
  return {{"weights", m.weights},
          {"intercept", m.intercept},
          {"iterations", m.iterations},
          {"hyperparameters",
           {{"alpha", hp.alpha},
            {"l1_ratio", hp.l1_ratio},
            {"tolerance", hp.tolerance},
            {"max_iterations", hp.max_iterations},
            {"eta", hp.eta},
            {"epsilon", hp.epsilon},
            {"seed", hp.seed}}}};
}

json body_json(const SvrModel& m) {
  return {{"support_inputs", vec3_list(m.support_inputs)},
          {"dual_coefficients", m.dual_coefficients},
          {"bias", m.bias},
          {"gamma", m.gamma},
          {"C", m.C},
          {"epsilon", m.epsilon},
          {"iterations", m.iterations},
          {"final_violation", m.final_violation}};
}

json body_json(const MlpModel& m) {
  json layers = json::array();
  for (const auto& layer : m.layers) {
    layers.push_back({{"weights", matrix_json(layer.weights)},
                      {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}});
  }
  return {{"hidden_layers", m.config.neurons},
          {"layers", std::move(layers)},
          {"target_mean", m.target_mean},
          {"target_std", m.target_std}};
}

LinearModel linear_from(const json& j, ModelKind kind, const Standardizer& s) {
  LinearModel m;
  switch (kind) {
    case ModelKind::ElasticNet: m.trainer = LinearTrainer::ElasticNet; break;
    case ModelKind::Lasso: m.trainer = LinearTrainer::Lasso; break;
    case ModelKind::Ridge: m.trainer = LinearTrainer::Ridge; break;
    default: m.trainer = LinearTrainer::Sgd; break;
  }
  m.weights = j.at("weights").get<std::array<double, kLinearWeights>>();
  m.intercept = j.at("intercept").get<double>();
  m.iterations = j.at("iterations").get<std::size_t>();
  const auto& hp = j.at("hyperparameters");
  m.hyperparameters.alpha = hp.at("alpha").get<double>();
  m.hyperparameters.l1_ratio = hp.at("l1_ratio").get<double>();
  m.hyperparameters.tolerance = hp.at("tolerance").get<double>();
  m.hyperparameters.max_iterations = hp.at("max_iterations").get<std::size_t>();
  m.hyperparameters.eta = hp.at("eta").get<double>();
  m.hyperparameters.epsilon = hp.at("epsilon").get<double>();
  m.hyperparameters.seed = hp.at("seed").get<std::uint64_t>();
  m.standardizer = s;
  return m;
}

SvrModel svr_from(const json& j, const Standardizer& s) {
  SvrModel m;
  m.support_inputs = j.at("support_inputs").get<std::vector<Vec3>>();
  m.dual_coefficients = j.at("dual_coefficients").get<std::vector<double>>();
  if (m.support_inputs.size() != m.dual_coefficients.size()) {
    throw Error(Errc::ParseFailure, "support inputs and dual coefficients differ in length");
  }
  m.bias = j.at("bias").get<double>();
  m.gamma = j.at("gamma").get<double>();
  m.C = j.at("C").get<double>();
  m.epsilon = j.at("epsilon").get<double>();
  m.iterations = j.at("iterations").get<std::size_t>();
  m.final_violation = j.at("final_violation").get<double>();
  m.standardizer = s;
  return m;
}

MlpModel mlp_from(const json& j, const Standardizer& s) {
  MlpModel m;
  m.config = NNConfig(j.at("hidden_layers").get<std::vector<int>>());
  const auto& layers = j.at("layers");
  if (!layers.is_array() || static_cast<int>(layers.size()) != m.config.hidden_layers() + 1) {
    throw Error(Errc::ParseFailure, "layer count does not match hidden_layers");
  }
  Eigen::Index fan_in = 3;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Eigen::Index fan_out = k < m.config.neurons.size() ? m.config.neurons[k] : 1;
    MlpLayer layer;
    layer.weights = matrix_from(layers[k].at("weights"), fan_out, fan_in);
    const auto bias = layers[k].at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(bias.size()) != fan_out) throw Error(Errc::ParseFailure, "bias length mismatch");
    layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), fan_out);
    m.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  m.target_mean = j.at("target_mean").get<double>();
  m.target_std = j.at("target_std").get<double>();
  m.standardizer = s;
  return m;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::ElasticNet: return "elasticnet";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::Ridge: return "ridge";
    case ModelKind::Sgd: return "sgd";
    case ModelKind::Svr: return "svr";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::ElasticNet, ModelKind::Lasso, ModelKind::Ridge, ModelKind::Sgd, ModelKind::Svr,
                 ModelKind::Mlp}) {
    if (text == to_string(k)) return k;
  }
  throw Error(Errc::InvalidConfig, "unknown model kind '" + std::string(text) + "'");
}

PredictiveModel::PredictiveModel(Body body, TrainingMetadata metadata)
    : body_(std::move(body)), metadata_(metadata) {}

ModelKind PredictiveModel::kind() const noexcept {
  if (const auto* lin = std::get_if<LinearModel>(&body_)) {
    switch (lin->trainer) {
      case LinearTrainer::ElasticNet: return ModelKind::ElasticNet;
      case LinearTrainer::Lasso: return ModelKind::Lasso;
      case LinearTrainer::Ridge: return ModelKind::Ridge;
      case LinearTrainer::Sgd: return ModelKind::Sgd;
    }
  }
  return std::holds_alternative<SvrModel>(body_) ? ModelKind::Svr : ModelKind::Mlp;
}

double PredictiveModel::predict(const Vec3& counters) const {
  const double t = std::visit([&](const auto& m) { return m.predict(counters); }, body_);
  if (!std::isfinite(t)) throw Error(Errc::NonFiniteOutput, "model produced a non-finite prediction");
  return t;
}

std::vector<Vec3> inputs_of(const Dataset& dataset) {
  std::vector<Vec3> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples()) out.push_back(s.contention.counters());
  return out;
}

std::vector<double> targets_of(const Dataset& dataset) {
  std::vector<double> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples()) out.push_back(s.t_app);
  return out;
}

PredictiveModel train_model(ModelKind kind, const Dataset& dataset, const TrainOptions& options) {
  const auto x = inputs_of(dataset);
  const auto y = targets_of(dataset);
  TrainingMetadata meta;
  meta.sample_count = dataset.size();
  for (const auto& s : dataset.samples()) meta.trained_at = std::max(meta.trained_at, s.taken_at());
  auto linear = [&](LinearTrainer trainer) {
    return PredictiveModel(train_linear(trainer, x, y, options.linear.value_or(LinearHyperparameters::defaults(trainer))),
                           meta);
  };
  switch (kind) {
    case ModelKind::ElasticNet: return linear(LinearTrainer::ElasticNet);
    case ModelKind::Lasso: return linear(LinearTrainer::Lasso);
    case ModelKind::Ridge: return linear(LinearTrainer::Ridge);
    case ModelKind::Sgd: return linear(LinearTrainer::Sgd);
    case ModelKind::Svr: return PredictiveModel(train_svr(x, y, options.svr), meta);
    case ModelKind::Mlp: return PredictiveModel(train_mlp(x, y, options.mlp_config, options.mlp), meta);
  }
  throw Error(Errc::InvalidConfig, "unknown model kind");
}

std::string model_to_json(const PredictiveModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["kind"] = to_string(model.kind());
  j["metadata"] = {{"sample_count", model.metadata().sample_count},
                   {"trained_at", model.metadata().trained_at}};
  std::visit(
      [&](const auto& m) {
        j["standardizer"] = standardizer_json(m.standardizer);
        j["body"] = body_json(m);
      },
      model.body());
  return j.dump(2) + "\n";
}

PredictiveModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseFailure, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != kModelFormat) {
      throw Error(Errc::ParseFailure, "not a model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) {
      throw Error(Errc::VersionMismatch, "model version " + std::to_string(version) + " (expected " +
                                             std::to_string(kModelVersion) + ")");
    }
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    TrainingMetadata meta;
    meta.sample_count = j.at("metadata").at("sample_count").get<std::size_t>();
    meta.trained_at = j.at("metadata").at("trained_at").get<double>();
    const Standardizer s = standardizer_from(j.at("standardizer"));
    const auto& body = j.at("body");
    switch (kind) {
      case ModelKind::Svr: return PredictiveModel(svr_from(body, s), meta);
      case ModelKind::Mlp: return PredictiveModel(mlp_from(body, s), meta);
      default: return PredictiveModel(linear_from(body, kind, s), meta);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseFailure, std::string("malformed model file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidConfig) throw Error(Errc::ParseFailure, e.what());
    throw;
  }
}

void save_model(const PredictiveModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out << model_to_json(model);
  if (!out.flush()) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

PredictiveModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace ctp
