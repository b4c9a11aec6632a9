#pragma once

#include "gridcast/dataset.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/svr.hpp"
#include "gridcast/trees.hpp"

#include "json.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gridcast {

enum class ModelKind { awmlstm, catboost, gbrt, lstm, lightgbm, svr };

// Report order.
inline constexpr std::array<ModelKind, 6> kAllModels = {ModelKind::awmlstm, ModelKind::catboost, ModelKind::gbrt,
                                                        ModelKind::lstm,    ModelKind::lightgbm, ModelKind::svr};

const char* model_name(ModelKind kind);          // "gbrt"
const char* model_display_name(ModelKind kind);  // "GBRT"
ModelKind parse_model(std::string_view name);
bool is_sequence_model(ModelKind kind);

// Hyperparameters for every model; each fit reads only its own block.
struct ModelConfigs {
  GbrtConfig gbrt;
  LightGbmConfig lightgbm;
  CatBoostConfig catboost;
  SvrConfig svr;
  LstmConfig lstm;
  LstmConfig awmlstm;
};

nlohmann::json config_to_json(const ModelConfigs& configs, ModelKind kind);
nlohmann::json configs_to_json(const ModelConfigs& configs);
// Overlays keys present in `j` (an object keyed by model name) onto `configs`.
// Unknown keys are rejected.
void merge_configs(ModelConfigs& configs, const nlohmann::json& j);

using ModelState = std::variant<TreeEnsemble, CatBoostModel, SvrSolution, SequenceModel>;

struct RegressorModel {
  ModelKind kind = ModelKind::gbrt;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<std::string> feature_names;
  ModelState state;
  // False when an iterative solver stopped on its budget instead of its tolerance.
  bool converged = true;

  // Rows of `x` must follow `feature_names`.
  std::vector<std::optional<double>> predict(const Matrix& x) const;
  // Reorders the table's columns by name; missing columns are an error.
  std::vector<std::optional<double>> predict(const FeatureTable& rows) const;
};

RegressorModel fit_model(ModelKind kind, const ModelConfigs& configs, const FeatureTable& train, Target target,
                         std::uint64_t seed);

// Versioned text artifact: a magic line followed by a JSON body.
std::string serialize_model(const RegressorModel& model);
RegressorModel deserialize_model(std::string_view text);
void save_model(const RegressorModel& model, const std::filesystem::path& path);
RegressorModel load_model(const std::filesystem::path& path);

inline constexpr std::string_view kModelMagic = "GRIDCAST-MODEL";
inline constexpr int kModelFormatVersion = 1;

}  // namespace gridcast
