#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "gridcast/error.hpp"
#include "gridcast/models.hpp"

using namespace gridcast;
using fixtures::TempDir;

namespace {

ModelConfigs small_configs() {
  ModelConfigs c;
  c.gbrt.trees = 15;
  c.lightgbm.trees = 15;
  c.catboost.trees = 10;
  c.catboost.depth = 3;
  c.lstm.hidden = 4;
  c.lstm.epochs = 2;
  c.awmlstm = c.lstm;
  return c;
}

const FeatureTable& table() {
  static const FeatureTable t = [] {
    const FeatureTable f = clean(build_features(gen_synthetic(400, 7)));
    return apply_minmax(f, fit_minmax(f));
  }();
  return t;
}

}  // namespace

TEST(ModelNames, RoundTripAndOrder) {
  for (ModelKind k : kAllModels) EXPECT_EQ(parse_model(model_name(k)), k);
  EXPECT_STREQ(model_display_name(ModelKind::lightgbm), "LightGBM");
  EXPECT_STREQ(model_display_name(ModelKind::awmlstm), "AWMLSTM");
  EXPECT_THROW(parse_model("xgboost"), ConfigError);
  EXPECT_TRUE(is_sequence_model(ModelKind::lstm));
  EXPECT_FALSE(is_sequence_model(ModelKind::svr));
}

class EveryModel : public ::testing::TestWithParam<ModelKind> {};

TEST_P(EveryModel, SerializationPreservesPredictionsBitForBit) {
  const auto m = fit_model(GetParam(), small_configs(), table(), Target::price, 11);
  const std::string text = serialize_model(m);
  EXPECT_EQ(text.rfind("GRIDCAST-MODEL 1\n", 0), 0u);
  const auto back = deserialize_model(text);
  EXPECT_EQ(back.kind, m.kind);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.feature_names, m.feature_names);
  EXPECT_EQ(back.converged, m.converged);
  EXPECT_EQ(back.predict(table().features), m.predict(table().features));
  EXPECT_EQ(serialize_model(back), text);
}

TEST_P(EveryModel, SameSeedSameModel) {
  const auto a = fit_model(GetParam(), small_configs(), table(), Target::demand, 5);
  const auto b = fit_model(GetParam(), small_configs(), table(), Target::demand, 5);
  EXPECT_EQ(serialize_model(a), serialize_model(b));
}

TEST_P(EveryModel, PredictionsCoverEveryRowExceptWarmup) {
  const auto m = fit_model(GetParam(), small_configs(), table(), Target::price, 3);
  const auto p = m.predict(table());
  ASSERT_EQ(p.size(), table().rows());
  const std::size_t skip = is_sequence_model(GetParam()) ? 24 : 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p[i].has_value(), i >= skip);
    if (p[i]) EXPECT_TRUE(std::isfinite(*p[i]));
  }
}

INSTANTIATE_TEST_SUITE_P(All, EveryModel, ::testing::ValuesIn(kAllModels),
                         [](const auto& info) { return std::string(model_name(info.param)); });

TEST(Regressor, ReordersColumnsByName) {
  const auto m = fit_model(ModelKind::gbrt, small_configs(), table(), Target::price, 1);
  FeatureTable shuffled = table();
  const auto n = static_cast<Eigen::Index>(shuffled.cols());
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  for (Eigen::Index i = 0; i < n; ++i) perm.indices()[i] = static_cast<int>(n - 1 - i);
  shuffled.features = shuffled.features * perm;
  std::reverse(shuffled.column_names.begin(), shuffled.column_names.end());
  EXPECT_EQ(m.predict(shuffled), m.predict(table()));
}

TEST(Regressor, MissingColumnIsNamed) {
  const auto m = fit_model(ModelKind::gbrt, small_configs(), table(), Target::price, 1);
  FeatureTable broken = table();
  const std::string lost = broken.column_names.front();
  broken.column_names.front() = "renamed";
  try {
    m.predict(broken);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(lost), std::string::npos);
  }
  EXPECT_THROW(m.predict(Matrix::Zero(3, 2)), DataError);
}

TEST(Regressor, ZeroTreesPredictsBase) {
  ModelConfigs c = small_configs();
  c.gbrt.trees = 0;
  const auto m = fit_model(ModelKind::gbrt, c, table(), Target::demand, 1);
  const auto& y = table().target_demand;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
  for (const auto& p : m.predict(table())) EXPECT_NEAR(*p, mean, 1e-12);
}

TEST(Artifact, RejectsCorruptInput) {
  EXPECT_THROW(deserialize_model(""), DataError);
  EXPECT_THROW(deserialize_model("GRIDCAST-MODEL 2\n{}"), DataError);
  EXPECT_THROW(deserialize_model("not a model\n{}"), DataError);
  EXPECT_THROW(deserialize_model("GRIDCAST-MODEL 1\n{\"kind\": \"gbrt\""), DataError);
  EXPECT_THROW(deserialize_model("GRIDCAST-MODEL 1\n{\"kind\": \"nope\"}"), DataError);
}

TEST(Artifact, SaveAndLoad) {
  TempDir dir;
  const auto m = fit_model(ModelKind::svr, small_configs(), table(), Target::price, 2);
  save_model(m, dir.path() / "svr.model");
  const auto back = load_model(dir.path() / "svr.model");
  EXPECT_EQ(back.predict(table()), m.predict(table()));
  EXPECT_THROW(load_model(dir.path() / "absent.model"), DataError);
}

TEST(Configs, MergeOverridesOnlyGivenKeys) {
  ModelConfigs c;
  merge_configs(c, nlohmann::json::parse(R"({"gbrt": {"trees": 7}, "svr": {"kernel": "linear"}})"));
  EXPECT_EQ(c.gbrt.trees, 7);
  EXPECT_EQ(c.gbrt.depth, GbrtConfig{}.depth);
  EXPECT_EQ(c.svr.kernel, KernelKind::linear);
  EXPECT_THROW(merge_configs(c, nlohmann::json::parse(R"({"gbrt": {"tress": 7}})")), ConfigError);
  EXPECT_THROW(merge_configs(c, nlohmann::json::parse(R"({"xgb": {}})")), ConfigError);
  EXPECT_THROW(merge_configs(c, nlohmann::json::parse(R"({"svr": {"kernel": "poly"}})")), ConfigError);
  const auto j = configs_to_json(c);
  ModelConfigs again;
  merge_configs(again, j);
  EXPECT_EQ(configs_to_json(again), j);
}
