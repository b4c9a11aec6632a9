#include "gridcast/error.hpp"
#include "gridcast/models.hpp"

namespace gridcast {

void to_json(nlohmann::json& j, KernelKind k) { j = kernel_name(k); }
void from_json(const nlohmann::json& j, KernelKind& k) { k = parse_kernel(j.get<std::string>()); }

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GbrtConfig, trees, depth, learning_rate, lambda, min_leaf)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LightGbmConfig, trees, max_leaves, learning_rate, bins, goss, goss_a, goss_b,
                                   lambda, min_leaf)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CatBoostConfig, trees, depth, learning_rate, permutations, ordered, lambda, bins)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SvrConfig, kernel, C, epsilon, gamma, tol, max_passes, cache_mb)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LstmConfig, hidden, epochs, learning_rate, batch_size, clip, window, attention)

const char* model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::awmlstm: return "awmlstm";
    case ModelKind::catboost: return "catboost";
    case ModelKind::gbrt: return "gbrt";
    case ModelKind::lstm: return "lstm";
    case ModelKind::lightgbm: return "lightgbm";
    case ModelKind::svr: return "svr";
  }
  return "?";
}

const char* model_display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::awmlstm: return "AWMLSTM";
    case ModelKind::catboost: return "CatBoost";
    case ModelKind::gbrt: return "GBRT";
    case ModelKind::lstm: return "LSTM";
    case ModelKind::lightgbm: return "LightGBM";
    case ModelKind::svr: return "SVR";
  }
  return "?";
}

ModelKind parse_model(std::string_view name) {
  for (ModelKind k : kAllModels) {
    if (name == model_name(k)) return k;
  }
  throw ConfigError("unknown model: " + std::string(name));
}

bool is_sequence_model(ModelKind kind) { return kind == ModelKind::lstm || kind == ModelKind::awmlstm; }

nlohmann::json config_to_json(const ModelConfigs& c, ModelKind kind) {
  switch (kind) {
    case ModelKind::gbrt: return c.gbrt;
    case ModelKind::lightgbm: return c.lightgbm;
    case ModelKind::catboost: return c.catboost;
    case ModelKind::svr: return c.svr;
    case ModelKind::lstm: return c.lstm;
    case ModelKind::awmlstm: return c.awmlstm;
  }
  return {};
}

nlohmann::json configs_to_json(const ModelConfigs& configs) {
  nlohmann::json j = nlohmann::json::object();
  for (ModelKind k : kAllModels) j[model_name(k)] = config_to_json(configs, k);
  return j;
}

namespace {

template <typename Config>
void overlay(Config& target, const nlohmann::json& patch, std::string_view model) {
  if (!patch.is_object()) throw ConfigError(std::string(model) + ": config must be an object");
  nlohmann::json merged = target;
  for (const auto& [key, value] : patch.items()) {
    if (!merged.contains(key)) throw ConfigError(std::string(model) + ": unknown config key '" + key + "'");
    merged[key] = value;
  }
  try {
    target = merged.get<Config>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(model) + ": invalid config value: " + e.what());
  }
}

}  // namespace

void merge_configs(ModelConfigs& configs, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model configs must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    switch (parse_model(key)) {
      case ModelKind::gbrt: overlay(configs.gbrt, value, key); break;
      case ModelKind::lightgbm: overlay(configs.lightgbm, value, key); break;
      case ModelKind::catboost: overlay(configs.catboost, value, key); break;
      case ModelKind::svr: overlay(configs.svr, value, key); break;
      case ModelKind::lstm: overlay(configs.lstm, value, key); break;
      case ModelKind::awmlstm: overlay(configs.awmlstm, value, key); break;
    }
  }
}

}  // namespace gridcast
