#include "gridcast/cli.hpp"

#include "CLI11.hpp"
#include "gridcast/error.hpp"
#include "gridcast/harness.hpp"
#include "gridcast/report.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace gridcast {

namespace {

std::uint64_t env_seed() {
  const char* text = std::getenv("GRIDCAST_SEED");
  if (!text || !*text) return 42;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != std::char_traits<char>::length(text)) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("GRIDCAST_SEED is not an unsigned integer: ") + text);
  }
}

nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

Target parse_target(const std::string& name) {
  if (name == "price") return Target::price;
  if (name == "demand") return Target::demand;
  throw ConfigError("unknown target: " + name);
}

std::vector<ModelKind> parse_model_list(const std::string& list) {
  std::vector<ModelKind> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(parse_model(item));
  }
  return out;
}

// Data-source options shared by featurize, train, evaluate and run.
struct SourceOptions {
  std::string input;
  std::size_t synthetic = 0;
  std::uint64_t seed = 0;
  std::string config;
  double split = 0.85;
  double corr = 0.95;
  CLI::Option* input_opt = nullptr;
  CLI::Option* synthetic_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* split_opt = nullptr;
  CLI::Option* corr_opt = nullptr;

  void attach(CLI::App* app) {
    input_opt = app->add_option("--input", input, "Market CSV (timestamp, price, demand, optional predispatch)");
    synthetic_opt = app->add_option("--synthetic", synthetic, "Generate N synthetic rows instead of reading a file");
    seed_opt = app->add_option("--seed", seed, "Master seed (default: $GRIDCAST_SEED, else 42)");
    app->add_option("--config", config, "JSON config file; flags override its values");
    split_opt = app->add_option("--split", split, "Training fraction of the chronological split");
    corr_opt = app->add_option("--corr-threshold", corr, "Absolute correlation above which a column is dropped");
  }

  BenchmarkConfig resolve() const {
    BenchmarkConfig c;
    c.seed = env_seed();
    if (!config.empty()) merge_config(c, read_config_file(config));
    if (input_opt->count() > 0) {
      c.input = input;
      if (synthetic_opt->count() == 0) c.synthetic_rows = 0;
    }
    if (synthetic_opt->count() > 0) {
      c.synthetic_rows = synthetic;
      if (input_opt->count() == 0) c.input.reset();
    }
    if (seed_opt->count() > 0) c.seed = seed;
    if (split_opt->count() > 0) c.split_ratio = split;
    if (corr_opt->count() > 0) c.correlation_threshold = corr;
    return c;
  }
};

std::string metrics_text(const CellResult& cell, ReportFormat format) {
  const MetricsRecord& m = cell.metrics;
  switch (format) {
    case ReportFormat::json: {
      nlohmann::json j = {{"model", model_name(cell.model)},
                          {"target", target_name(cell.target)},
                          {"mse", m.mse},
                          {"mae", m.mae},
                          {"r2", m.r2},
                          {"mape", m.mape},
                          {"n_evaluated", m.n_evaluated},
                          {"n_excluded", m.n_excluded},
                          {"within_5pct", cell.accuracy_5},
                          {"within_10pct", cell.accuracy_10}};
      return j.dump(2) + '\n';
    }
    case ReportFormat::csv:
      return "model,target,mse,mae,r2,mape,n_excluded,within_5pct,within_10pct\n" +
             std::string(model_display_name(cell.model)) + ',' + target_name(cell.target) + ',' +
             format_number(m.mse) + ',' + format_number(m.mae) + ',' + format_number(m.r2) + ',' +
             format_number(m.mape) + ',' + std::to_string(m.n_excluded) + ',' + format_number(cell.accuracy_5) +
             ',' + format_number(cell.accuracy_10) + '\n';
    case ReportFormat::md: {
      std::ostringstream s;
      s << "| Model | Target | MSE | MAE | R² | MAPE | ±5% | ±10% |\n|---|---|---:|---:|---:|---:|---:|---:|\n"
        << "| " << model_display_name(cell.model) << " | " << target_name(cell.target) << " | " << m.mse << " | "
        << m.mae << " | " << m.r2 << " | " << m.mape << "% | " << cell.accuracy_5 << "% | " << cell.accuracy_10
        << "% |\n";
      return s.str();
    }
  }
  return {};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gridcast: electricity price and demand forecasting benchmark", "gridcast"};
  app.require_subcommand(1);

  // featurize
  CLI::App* featurize = app.add_subcommand("featurize", "Build, clean and prune the feature table and write it as CSV");
  SourceOptions featurize_src;
  featurize_src.attach(featurize);
  std::string featurize_out;
  featurize->add_option("--out", featurize_out, "Output CSV path")->required();

  // train
  CLI::App* train = app.add_subcommand("train", "Fit one model on the training split and save the artifact");
  SourceOptions train_src;
  train_src.attach(train);
  std::string train_model, train_target = "price", train_out;
  train->add_option("--model", train_model, "One of awmlstm, catboost, gbrt, lstm, lightgbm, svr")->required();
  train->add_option("--target", train_target, "price or demand");
  train->add_option("--out", train_out, "Model artifact path")->required();

  // evaluate
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a saved model on the test split of its data source");
  SourceOptions eval_src;
  eval_src.attach(evaluate);
  std::string eval_model, eval_target = "price", eval_format = "md";
  evaluate->add_option("--model-file", eval_model, "Artifact written by train")->required();
  evaluate->add_option("--target", eval_target, "price or demand");
  evaluate->add_option("--format", eval_format, "json, csv or md");

  // run
  CLI::App* run = app.add_subcommand("run", "Run the full benchmark: 6 models x 2 targets");
  SourceOptions run_src;
  run_src.attach(run);
  std::string run_out = "gridcast-run", run_models, run_format = "md";
  unsigned run_threads = 0;
  run->add_option("--out", run_out, "Output directory for report artifacts");
  CLI::Option* models_opt = run->add_option("--models", run_models, "Comma-separated subset of models");
  run->add_option("--format", run_format, "Summary printed to stdout: json, csv or md");
  run->add_option("--threads", run_threads, "Worker threads (0 = hardware concurrency)");

  // synth
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic market series as CSV");
  std::size_t synth_rows = 0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--rows", synth_rows, "Number of rows (at least 200)")->required();
  CLI::Option* synth_seed_opt = synth->add_option("--seed", synth_seed, "Seed (default: $GRIDCAST_SEED, else 42)");
  synth->add_option("--out", synth_out, "Output CSV path")->required();

  // report
  CLI::App* report = app.add_subcommand("report", "Re-render a stored benchmark run");
  std::string report_dir, report_format = "md";
  bool report_svg = false;
  report->add_option("--run", report_dir, "Directory written by run")->required();
  report->add_option("--format", report_format, "json, csv or md");
  report->add_flag("--svg", report_svg, "Also write prediction and error charts as SVG into the run directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == featurize) {
      const BenchmarkConfig c = featurize_src.resolve();
      validate(c);
      const RawSeries raw = c.input ? load_csv(*c.input) : gen_synthetic(c.synthetic_rows, c.seed);
      const FeatureTable table = prune_correlated(clean(build_features(raw)), c.correlation_threshold);
      write_feature_csv(table, featurize_out);
      out << "wrote " << table.rows() << " rows x " << table.cols() << " features to " << featurize_out << '\n';
      if (!table.dropped_columns.empty()) {
        out << "dropped (correlated):";
        for (const auto& name : table.dropped_columns) out << ' ' << name;
        out << '\n';
      }
      return 0;
    }

    if (active == train) {
      BenchmarkConfig c = train_src.resolve();
      const ModelKind kind = parse_model(train_model);
      const Target target = parse_target(train_target);
      const PreparedData data = prepare_data(c);
      RegressorModel model;
      try {
        model = fit_model(kind, c.models, data.train, target, cell_seed(c.seed, kind, target));
      } catch (const NumericError& e) {
        throw NumericError(std::string(model_name(kind)) + " fit: " + e.what());
      }
      save_model(model, train_out);
      out << "trained " << model_name(kind) << " on " << target_name(target) << " (" << data.train.rows()
          << " rows); saved to " << train_out << '\n';
      if (!model.converged) out << "warning: solver stopped on its iteration budget\n";
      return 0;
    }

    if (active == evaluate) {
      const BenchmarkConfig c = eval_src.resolve();
      const ReportFormat format = parse_report_format(eval_format);
      const Target target = parse_target(eval_target);
      const RegressorModel model = load_model(eval_model);
      const PreparedData data = prepare_data(c);
      CellResult cell;
      cell.model = model.kind;
      cell.target = target;
      std::vector<std::optional<double>> predicted = model.predict(data.test);
      const MinMax& range = target == Target::price ? data.params.price : data.params.demand;
      for (auto& p : predicted) {
        if (!p) continue;
        if (!std::isfinite(*p)) throw NumericError(std::string(model_name(model.kind)) + " predict: non-finite output");
        p = invert_minmax(*p, range);
      }
      const std::vector<double>& actual = data.raw.test.target(target);
      cell.metrics = compute_metrics(actual, predicted);
      cell.accuracy_5 = accuracy_within(actual, predicted, 0.05);
      cell.accuracy_10 = accuracy_within(actual, predicted, 0.10);
      out << metrics_text(cell, format);
      return 0;
    }

    if (active == run) {
      BenchmarkConfig c = run_src.resolve();
      if (models_opt->count() > 0) c.enabled = parse_model_list(run_models);
      c.threads = run_threads;
      const ReportFormat format = parse_report_format(run_format);
      try {
        validate(c);
      } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n\n" << run->help();
        return 1;
      }
      const BenchmarkReport result = run_benchmark(c);
      write_report(result, run_out);
      out << render(result, format);
      int code = 0;
      for (const CellResult& cell : result.cells) {
        if (cell.ok()) continue;
        err << "cell failed: " << *cell.failure << '\n';
        code = std::max(code, cell.failure_code);
      }
      return code;
    }

    if (active == synth) {
      const std::uint64_t seed = synth_seed_opt->count() > 0 ? synth_seed : env_seed();
      write_csv(gen_synthetic(synth_rows, seed), synth_out);
      out << "wrote " << synth_rows << " rows to " << synth_out << '\n';
      return 0;
    }

    if (active == report) {
      const ReportFormat format = parse_report_format(report_format);
      const BenchmarkReport stored = read_report(report_dir);
      out << render(stored, format);
      if (report_svg) {
        const std::size_t n = write_svg_charts(stored, report_dir);
        out << "wrote " << n << " SVG charts to " << report_dir << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return error_exit_code(e);
  }
  return 1;
}

}  // namespace gridcast
