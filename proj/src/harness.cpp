#include "gridcast/harness.hpp"

#include "gridcast/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

namespace gridcast {

using nlohmann::json;

nlohmann::json config_to_json(const BenchmarkConfig& config) {
  json enabled = json::array();
  for (ModelKind k : config.enabled) enabled.push_back(model_name(k));
  return {{"input", config.input ? json(config.input->generic_string()) : json(nullptr)},
          {"synthetic", config.synthetic_rows},
          {"split_ratio", config.split_ratio},
          {"correlation_threshold", config.correlation_threshold},
          {"seed", config.seed},
          {"models", enabled},
          {"model_configs", configs_to_json(config.models)}};
}

void merge_config(BenchmarkConfig& config, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "input") {
        if (value.is_null()) {
          config.input.reset();
        } else {
          config.input = value.get<std::string>();
        }
      } else if (key == "synthetic") {
        config.synthetic_rows = value.get<std::size_t>();
      } else if (key == "split_ratio") {
        config.split_ratio = value.get<double>();
      } else if (key == "correlation_threshold") {
        config.correlation_threshold = value.get<double>();
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "models") {
        config.enabled.clear();
        for (const json& m : value) config.enabled.push_back(parse_model(m.get<std::string>()));
      } else if (key == "model_configs") {
        merge_configs(config.models, value);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

void validate(const BenchmarkConfig& config) {
  if (config.input && config.synthetic_rows > 0) throw ConfigError("choose either an input file or synthetic data");
  if (!config.input && config.synthetic_rows == 0) throw ConfigError("no input: give an input file or synthetic rows");
  if (!(config.split_ratio > 0.0 && config.split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
  if (!(config.correlation_threshold > 0.0 && config.correlation_threshold <= 1.0)) {
    throw ConfigError("correlation_threshold must be in (0, 1]");
  }
  if (config.enabled.empty()) throw ConfigError("no models enabled");
  for (std::size_t i = 0; i < config.enabled.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (config.enabled[i] == config.enabled[k]) {
        throw ConfigError(std::string("model listed twice: ") + model_name(config.enabled[i]));
      }
    }
  }
  validate(config.models.gbrt);
  validate(config.models.lightgbm);
  validate(config.models.catboost);
  validate(config.models.svr);
  validate(config.models.lstm);
  validate(config.models.awmlstm);
}

std::uint64_t cell_seed(std::uint64_t master, ModelKind kind, Target target) {
  return Rng(master).derive(std::string(model_name(kind)) + "/" + target_name(target)).seed();
}

std::vector<ErrorRow> error_series(std::span<const double> actual, std::span<const std::optional<double>> predicted,
                                   std::span<const Timestamp> timestamps) {
  if (actual.size() != predicted.size() || actual.size() != timestamps.size()) {
    throw DataError("error_series: length mismatch");
  }
  std::vector<ErrorRow> rows(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ErrorRow& r = rows[i];
    r.timestamp = timestamps[i];
    r.actual = actual[i];
    r.predicted = predicted[i];
    if (!predicted[i]) continue;
    r.error = *predicted[i] - actual[i];
    if (std::abs(actual[i]) >= kRelativeErrorCutoff) r.relative_error = *r.error / std::abs(actual[i]);
  }
  return rows;
}

std::string CellResult::errors_file() const {
  return std::string("errors_") + model_name(model) + "_" + target_name(target) + ".csv";
}

const CellResult* BenchmarkReport::find(ModelKind kind, Target target) const {
  for (const CellResult& c : cells) {
    if (c.model == kind && c.target == target) return &c;
  }
  return nullptr;
}

PreparedData prepare_data(const BenchmarkConfig& config) {
  validate(config);
  const RawSeries raw = config.input ? load_csv(*config.input) : gen_synthetic(config.synthetic_rows, config.seed);
  const FeatureTable table = prune_correlated(clean(build_features(raw)), config.correlation_threshold);

  PreparedData data;
  data.raw = chronological_split(table, config.split_ratio);
  data.params = fit_minmax(data.raw.train);
  data.train = apply_minmax(data.raw.train, data.params);
  data.test = apply_minmax(data.raw.test, data.params);
  data.summary.raw_rows = raw.size();
  data.summary.feature_rows = table.rows();
  data.summary.train_rows = data.train.rows();
  data.summary.test_rows = data.test.rows();
  data.summary.features = table.column_names;
  data.summary.dropped_columns = table.dropped_columns;
  return data;
}

CellResult run_cell(const PreparedData& data, const ModelConfigs& models, ModelKind kind, Target target,
                    std::uint64_t master_seed) {
  CellResult cell;
  cell.model = kind;
  cell.target = target;
  cell.seed = cell_seed(master_seed, kind, target);
  const std::string label = std::string(model_name(kind)) + "/" + target_name(target);
  const char* stage = "fit";
  try {
    const auto start = std::chrono::steady_clock::now();
    const RegressorModel model = fit_model(kind, models, data.train, target, cell.seed);
    cell.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    cell.converged = model.converged;

    stage = "predict";
    std::vector<std::optional<double>> predicted = model.predict(data.test);
    const MinMax& range = target == Target::price ? data.params.price : data.params.demand;
    for (auto& p : predicted) {
      if (!p) continue;
      if (!std::isfinite(*p)) throw NumericError("non-finite prediction");
      p = invert_minmax(*p, range);
    }

    stage = "evaluate";
    const std::vector<double>& actual = data.raw.test.target(target);
    cell.metrics = compute_metrics(actual, predicted);
    cell.accuracy_5 = accuracy_within(actual, predicted, 0.05);
    cell.accuracy_10 = accuracy_within(actual, predicted, 0.10);
    cell.errors = error_series(actual, predicted, data.raw.test.row_timestamps);
  } catch (const std::exception& e) {
    cell.failure = label + " " + stage + ": " + e.what();
    cell.failure_code = error_exit_code(e);
    cell.errors.clear();
  }
  return cell;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  const PreparedData data = prepare_data(config);

  BenchmarkReport report;
  report.config = config_to_json(config);
  report.dataset = data.summary;
  for (ModelKind k : kAllModels) {
    if (std::find(config.enabled.begin(), config.enabled.end(), k) == config.enabled.end()) continue;
    for (Target t : {Target::price, Target::demand}) {
      CellResult c;
      c.model = k;
      c.target = t;
      report.cells.push_back(c);
    }
  }

  unsigned threads = config.threads > 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(report.cells.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < report.cells.size(); i = next++) {
      CellResult& c = report.cells[i];
      c = run_cell(data, config.models, c.model, c.target, config.seed);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return report;
}

}  // namespace gridcast
