#include <fstream>
#include <random>
#include <sstream>

#include "ctp/model.hpp"
#include "ctp/synthlab.hpp"
#include "support.hpp"

using namespace ctp;

namespace {

const ModelKind kAllKinds[] = {ModelKind::ElasticNet, ModelKind::Lasso, ModelKind::Ridge,
                               ModelKind::Sgd,        ModelKind::Svr,   ModelKind::Mlp};

Dataset small_synth(OracleForm form) {
  auto spec = form == OracleForm::Polynomial ? SynthSpec::polynomial_default() : SynthSpec::exponential_default();
  spec.n = 120;
  spec.seed = 21;
  return gen_synth_dataset(spec);
}

PredictiveModel quick_model(ModelKind kind) {
  TrainOptions o;
  o.mlp.epochs = 30;
  o.mlp_config = NNConfig({7, 4});
  return train_model(kind, small_synth(OracleForm::Exponential), o);
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ModelKind, NamesRoundTrip) {
  for (auto k : kAllKinds) EXPECT_EQ(parse_model_kind(to_string(k)), k);
  EXPECT_CTP_ERROR(parse_model_kind("forest"), Errc::InvalidConfig);
}

TEST(Model, MetadataRecordsTheTrainingSet) {
  const Dataset d = small_synth(OracleForm::Polynomial);
  const auto m = train_model(ModelKind::Ridge, d);
  EXPECT_EQ(m.kind(), ModelKind::Ridge);
  EXPECT_EQ(m.metadata().sample_count, d.size());
  EXPECT_EQ(m.metadata().trained_at, d.samples().back().taken_at());
}

TEST(Model, SaveLoadPreservesEveryKindExactly) {
  test::TempDir dir;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto k : kAllKinds) {
    const auto m = quick_model(k);
    save_model(m, dir / "m.model");
    const auto back = load_model(dir / "m.model");
    EXPECT_EQ(back, m) << to_string(k);
    for (int i = 0; i < 50; ++i) {
      const Vec3 x{2e9 + 6e9 * u(rng), 1e8 + 3e8 * u(rng), 2e4 + 6e4 * u(rng)};
      const double a = m.predict(x), b = back.predict(x);
      EXPECT_LE(std::abs(a - b), 1e-12 * std::abs(a)) << to_string(k);
    }
    // A second save of the loaded model is byte-identical.
    save_model(back, dir / "m2.model");
    EXPECT_EQ(read_text(dir / "m.model"), read_text(dir / "m2.model"));
  }
}

TEST(Model, PredictDoesNotMutate) {
  for (auto k : kAllKinds) {
    const auto m = quick_model(k);
    const std::string before = model_to_json(m);
    const ContentionVector v{4000000000, 200000000, 50000, 3.0, 0.0};
    const double first = predict(m, v);
    EXPECT_EQ(predict(m, v), first);
    EXPECT_EQ(model_to_json(m), before);
  }
}

TEST(Model, UnknownVersionIsRejected) {
  std::string text = model_to_json(quick_model(ModelKind::Ridge));
  const auto at = text.find("\"version\": 1");
  ASSERT_NE(at, std::string::npos) << text.substr(0, 200);
  text.replace(at, 12, "\"version\": 99");
  EXPECT_CTP_ERROR(model_from_json(text), Errc::VersionMismatch);
}

TEST(Model, TruncatedOrForeignFilesAreParseFailures) {
  const std::string text = model_to_json(quick_model(ModelKind::Svr));
  EXPECT_CTP_ERROR(model_from_json(text.substr(0, text.size() / 2)), Errc::ParseFailure);
  EXPECT_CTP_ERROR(model_from_json(""), Errc::ParseFailure);
  EXPECT_CTP_ERROR(model_from_json("{\"format\":\"other\"}"), Errc::ParseFailure);
  test::TempDir dir;
  EXPECT_CTP_ERROR(load_model(dir / "absent.model"), Errc::IoFailure);
}

TEST(Model, ConstantLinearModelPredictsItsIntercept) {
  LinearModel lm;
  lm.intercept = 7.0;
  const PredictiveModel m(lm, {});
  EXPECT_EQ(m.predict(ContentionVector{1, 2, 3, 3.0, 0.0}), 7.0);
  EXPECT_EQ(m.predict(ContentionVector{900000000, 0, 77, 3.0, 0.0}), 7.0);
}

TEST(Model, NonFinitePredictionIsAnError) {
  LinearModel lm;
  lm.intercept = std::numeric_limits<double>::infinity();
  const PredictiveModel m(lm, {});
  EXPECT_CTP_ERROR(m.predict(ContentionVector{1, 2, 3, 3.0, 0.0}), Errc::NonFiniteOutput);
}

TEST(Model, ScalingCountersLeavesMlpPredictionsUnchanged) {
  const Dataset d = small_synth(OracleForm::Exponential);
  Dataset scaled;
  for (const auto& s : d.samples()) {
    Sample t = s;
    t.contention.c_cpu *= 2;
    t.contention.c_mem *= 2;
    t.contention.c_disk *= 2;
    scaled.append(t);
  }
  TrainOptions o;
  o.mlp.epochs = 40;
  const auto a = train_model(ModelKind::Mlp, d, o);
  const auto b = train_model(ModelKind::Mlp, scaled, o);
  for (std::size_t i = 0; i < 20; ++i) {
    const double pa = a.predict(d[i].contention), pb = b.predict(scaled[i].contention);
    EXPECT_NEAR(pa, pb, 1e-9 * std::abs(pa));
  }
}
