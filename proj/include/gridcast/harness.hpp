#pragma once

#include "gridcast/dataset.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/models.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gridcast {

struct BenchmarkConfig {
  // Exactly one data source: a CSV path or a synthetic row count.
  std::optional<std::filesystem::path> input;
  std::size_t synthetic_rows = 0;
  double split_ratio = 0.85;
  double correlation_threshold = 0.95;
  ModelConfigs models;
  std::vector<ModelKind> enabled{kAllModels.begin(), kAllModels.end()};
  std::uint64_t seed = 42;
  // 0 uses the hardware concurrency. Results do not depend on it.
  unsigned threads = 0;
};

// Keys mirror the config file schema. Output location and thread count are
// run-time choices and are left out so the echo is reproducible.
nlohmann::json config_to_json(const BenchmarkConfig& config);
// Overlays a config document onto `config`; unknown keys are rejected.
void merge_config(BenchmarkConfig& config, const nlohmann::json& j);
void validate(const BenchmarkConfig& config);

std::uint64_t cell_seed(std::uint64_t master, ModelKind kind, Target target);

struct ErrorRow {
  Timestamp timestamp;
  double actual = 0.0;
  std::optional<double> predicted;
  // predicted - actual
  std::optional<double> error;
  // error / |actual|; absent when the prediction is absent or |actual| is below the cutoff.
  std::optional<double> relative_error;
};

std::vector<ErrorRow> error_series(std::span<const double> actual, std::span<const std::optional<double>> predicted,
                                   std::span<const Timestamp> timestamps);

struct CellResult {
  ModelKind model = ModelKind::gbrt;
  Target target = Target::price;
  std::uint64_t seed = 0;
  std::optional<std::string> failure;
  // CLI exit code matching the failure's error class; not persisted.
  int failure_code = 0;
  MetricsRecord metrics;
  double accuracy_5 = 0.0;
  double accuracy_10 = 0.0;
  bool converged = true;
  double fit_seconds = 0.0;
  std::vector<ErrorRow> errors;

  bool ok() const { return !failure.has_value(); }
  std::string errors_file() const;
};

struct DatasetSummary {
  std::size_t raw_rows = 0;
  std::size_t feature_rows = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::vector<std::string> features;
  std::vector<std::string> dropped_columns;
};

struct BenchmarkReport {
  nlohmann::json config;
  DatasetSummary dataset;
  // Ordered by model (report order), then price before demand.
  std::vector<CellResult> cells;

  const CellResult* find(ModelKind kind, Target target) const;
};

// Data shared by every cell: the split tables before and after normalization.
struct PreparedData {
  DatasetSummary summary;
  TrainTestSplit raw;
  NormalizationParams params;
  FeatureTable train;
  FeatureTable test;
};

PreparedData prepare_data(const BenchmarkConfig& config);

CellResult run_cell(const PreparedData& data, const ModelConfigs& models, ModelKind kind, Target target,
                    std::uint64_t master_seed);

BenchmarkReport run_benchmark(const BenchmarkConfig& config);

}  // namespace gridcast
