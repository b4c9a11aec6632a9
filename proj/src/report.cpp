#include "gridcast/report.hpp"

#include "gridcast/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gridcast {

using nlohmann::json;

namespace {

constexpr const char* kThresholdLabels[] = {"±5%", "±10%"};
constexpr Target kTargets[] = {Target::price, Target::demand};

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Target parse_target(const std::string& name) {
  if (name == "price") return Target::price;
  if (name == "demand") return Target::demand;
  throw DataError("unknown target: " + name);
}

std::optional<double> parse_optional(std::string_view field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError("line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

json cell_to_json(const CellResult& c) {
  json j = {{"model", model_name(c.model)}, {"target", target_name(c.target)}, {"seed", c.seed}};
  if (!c.ok()) {
    j["status"] = "failed";
    j["failure"] = *c.failure;
    return j;
  }
  j["status"] = "ok";
  j["metrics"] = {{"mse", c.metrics.mse},
                  {"mae", c.metrics.mae},
                  {"r2", c.metrics.r2},
                  {"mape", c.metrics.mape},
                  {"n_evaluated", c.metrics.n_evaluated},
                  {"n_excluded", c.metrics.n_excluded}};
  j["accuracy"] = {{"within_5pct", c.accuracy_5}, {"within_10pct", c.accuracy_10}};
  j["converged"] = c.converged;
  j["errors_file"] = c.errors_file();
  return j;
}

CellResult cell_from_json(const json& j) {
  CellResult c;
  c.model = parse_model(j.at("model").get<std::string>());
  c.target = parse_target(j.at("target").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  if (j.at("status").get<std::string>() != "ok") {
    c.failure = j.at("failure").get<std::string>();
    return c;
  }
  const json& m = j.at("metrics");
  c.metrics.mse = m.at("mse").get<double>();
  c.metrics.mae = m.at("mae").get<double>();
  c.metrics.r2 = m.at("r2").get<double>();
  c.metrics.mape = m.at("mape").get<double>();
  c.metrics.n_evaluated = m.at("n_evaluated").get<std::size_t>();
  c.metrics.n_excluded = m.at("n_excluded").get<std::size_t>();
  c.accuracy_5 = j.at("accuracy").at("within_5pct").get<double>();
  c.accuracy_10 = j.at("accuracy").at("within_10pct").get<double>();
  c.converged = j.at("converged").get<bool>();
  return c;
}

// Polyline chart over the row index with a zero line when the range spans 0.
std::string line_chart(const std::string& title, const std::vector<std::pair<std::string, std::string>>& series_style,
                       const std::vector<std::vector<std::optional<double>>>& series) {
  constexpr double kWidth = 960, kHeight = 360, kLeft = 70, kRight = 20, kTop = 40, kBottom = 40;
  std::size_t n = 0;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    n = std::max(n, s.size());
    for (const auto& v : s) {
      if (!v) continue;
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  }
  if (!(lo <= hi)) lo = 0, hi = 1;
  if (lo == hi) lo -= 1, hi += 1;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](std::size_t i) { return kLeft + (n > 1 ? plot_w * static_cast<double>(i) / (n - 1) : 0.0); };
  auto py = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (double v : {lo, hi}) {
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(py(v) + 4, 1)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fixed(v, 2) << "</text>\n";
  }
  if (lo < 0 && hi > 0) {
    svg << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + plot_w << "\" y1=\"" << fixed(py(0), 2) << "\" y2=\""
        << fixed(py(0), 2) << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    // Absent points split the line into separate runs.
    std::string points;
    auto flush = [&] {
      if (!points.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"" << series_style[s].second << "\" stroke-width=\"1\" points=\""
            << points << "\"/>\n";
      }
      points.clear();
    };
    for (std::size_t i = 0; i < series[s].size(); ++i) {
      if (!series[s][i]) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += fixed(px(i), 2) + ',' + fixed(py(*series[s][i]), 2);
    }
    flush();
    svg << "<text x=\"" << kLeft + 10 + 120 * s << "\" y=\"" << kHeight - 12 << "\" font-family=\"sans-serif\" "
        << "font-size=\"12\" fill=\"" << series_style[s].second << "\">" << series_style[s].first << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "md") return ReportFormat::md;
  throw ConfigError("unknown format: " + std::string(name));
}

std::string accuracy_file(Target target) { return std::string("accuracy_") + target_name(target) + ".csv"; }

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string summary_csv(const BenchmarkReport& report) {
  std::string out = "model,target,mse,mae,r2,mape,n_excluded\n";
  for (const CellResult& c : report.cells) {
    out += model_display_name(c.model);
    out += ',';
    out += target_name(c.target);
    if (c.ok()) {
      out += ',' + format_number(c.metrics.mse) + ',' + format_number(c.metrics.mae) + ',' +
             format_number(c.metrics.r2) + ',' + format_number(c.metrics.mape) + ',' +
             std::to_string(c.metrics.n_excluded);
    } else {
      out += ",,,,,";
    }
    out += '\n';
  }
  return out;
}

std::string accuracy_csv(const BenchmarkReport& report, Target target) {
  std::string out = "threshold";
  for (ModelKind k : kAllModels) {
    out += ',';
    out += model_display_name(k);
  }
  out += '\n';
  for (int row = 0; row < 2; ++row) {
    out += kThresholdLabels[row];
    for (ModelKind k : kAllModels) {
      out += ',';
      const CellResult* c = report.find(k, target);
      if (c && c->ok()) out += format_number(row == 0 ? c->accuracy_5 : c->accuracy_10);
    }
    out += '\n';
  }
  return out;
}

std::string errors_csv(const CellResult& cell) {
  std::string out = "timestamp,actual,predicted,error,relative_error,excluded\n";
  for (const ErrorRow& r : cell.errors) {
    out += format_timestamp(r.timestamp) + ',' + format_number(r.actual) + ',' + optional_number(r.predicted) + ',' +
           optional_number(r.error) + ',' + optional_number(r.relative_error) + ',' +
           (r.relative_error ? "0" : "1") + '\n';
  }
  return out;
}

std::vector<ErrorRow> parse_errors_csv(std::string_view text) {
  std::vector<ErrorRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "timestamp,actual,predicted,error,relative_error,excluded") {
    throw DataError("error series: unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
      fields.push_back(rest.substr(0, pos));
    }
    fields.push_back(rest);
    if (fields.size() != 6) throw DataError("error series line " + std::to_string(line_no) + ": expected 6 fields");
    ErrorRow r;
    r.timestamp = parse_timestamp(fields[0]);
    const auto actual = parse_optional(fields[1], line_no);
    if (!actual) throw DataError("error series line " + std::to_string(line_no) + ": missing actual");
    r.actual = *actual;
    r.predicted = parse_optional(fields[2], line_no);
    r.error = parse_optional(fields[3], line_no);
    r.relative_error = parse_optional(fields[4], line_no);
    rows.push_back(r);
  }
  return rows;
}

std::string report_json(const BenchmarkReport& report) {
  json cells = json::array();
  for (const CellResult& c : report.cells) cells.push_back(cell_to_json(c));
  const DatasetSummary& d = report.dataset;
  json j = {{"format", "gridcast-report"},
            {"version", 1},
            {"config", report.config},
            {"dataset",
             {{"raw_rows", d.raw_rows},
              {"feature_rows", d.feature_rows},
              {"train_rows", d.train_rows},
              {"test_rows", d.test_rows},
              {"features", d.features},
              {"dropped_columns", d.dropped_columns}}},
            {"files",
             {{"summary", kSummaryFile},
              {"accuracy_price", accuracy_file(Target::price)},
              {"accuracy_demand", accuracy_file(Target::demand)},
              {"timing", kTimingFile}}},
            {"cells", cells}};
  return j.dump(2) + '\n';
}

std::string timing_json(const BenchmarkReport& report) {
  json cells = json::array();
  for (const CellResult& c : report.cells) {
    cells.push_back({{"model", model_name(c.model)}, {"target", target_name(c.target)}, {"fit_seconds", c.fit_seconds}});
  }
  return json{{"cells", cells}}.dump(2) + '\n';
}

std::string render_markdown(const BenchmarkReport& report) {
  std::string out;
  for (Target t : kTargets) {
    out += std::string("### Accuracy within threshold: ") + target_name(t) + "\n\n| Threshold |";
    for (ModelKind k : kAllModels) out += std::string(" ") + model_display_name(k) + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < kAllModels.size(); ++i) out += "---:|";
    out += '\n';
    for (int row = 0; row < 2; ++row) {
      out += std::string("| ") + kThresholdLabels[row] + " |";
      for (ModelKind k : kAllModels) {
        const CellResult* c = report.find(k, t);
        out += ' ';
        out += c && c->ok() ? fixed(row == 0 ? c->accuracy_5 : c->accuracy_10, 2) + "%" : std::string("n/a");
        out += " |";
      }
      out += '\n';
    }
    out += '\n';
  }
  out += "### Prediction errors\n\n| Model | Target | MSE | MAE | R² | MAPE | Excluded |\n";
  out += "|---|---|---:|---:|---:|---:|---:|\n";
  for (const CellResult& c : report.cells) {
    out += std::string("| ") + model_display_name(c.model) + " | " + target_name(c.target) + " | ";
    if (c.ok()) {
      out += fixed(c.metrics.mse, 4) + " | " + fixed(c.metrics.mae, 4) + " | " + fixed(c.metrics.r2, 4) + " | " +
             fixed(c.metrics.mape, 2) + "% | " + std::to_string(c.metrics.n_excluded) + " |\n";
    } else {
      out += "failed | | | | |\n";
    }
  }
  bool any_failed = false;
  for (const CellResult& c : report.cells) {
    if (c.ok()) continue;
    if (!any_failed) out += "\nFailures:\n\n";
    any_failed = true;
    out += "- " + *c.failure + '\n';
  }
  return out;
}

std::string render(const BenchmarkReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return report_json(report);
    case ReportFormat::csv: return summary_csv(report);
    case ReportFormat::md: return render_markdown(report);
  }
  return {};
}

void write_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / kReportFile, report_json(report));
  write_text(dir / kSummaryFile, summary_csv(report));
  for (Target t : kTargets) write_text(dir / accuracy_file(t), accuracy_csv(report, t));
  for (const CellResult& c : report.cells) {
    if (c.ok()) write_text(dir / c.errors_file(), errors_csv(c));
  }
  write_text(dir / kTimingFile, timing_json(report));
}

BenchmarkReport read_report(const std::filesystem::path& dir) {
  const std::filesystem::path path = dir / kReportFile;
  if (!std::filesystem::is_directory(dir)) throw DataError("run directory not found: " + dir.string());
  BenchmarkReport report;
  try {
    const json j = json::parse(read_text(path));
    if (j.at("format").get<std::string>() != "gridcast-report" || j.at("version").get<int>() != 1) {
      throw DataError(path.string() + ": unsupported report format");
    }
    report.config = j.at("config");
    const json& d = j.at("dataset");
    report.dataset.raw_rows = d.at("raw_rows").get<std::size_t>();
    report.dataset.feature_rows = d.at("feature_rows").get<std::size_t>();
    report.dataset.train_rows = d.at("train_rows").get<std::size_t>();
    report.dataset.test_rows = d.at("test_rows").get<std::size_t>();
    report.dataset.features = d.at("features").get<std::vector<std::string>>();
    report.dataset.dropped_columns = d.at("dropped_columns").get<std::vector<std::string>>();
    for (const json& c : j.at("cells")) report.cells.push_back(cell_from_json(c));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": corrupt report: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError(path.string() + ": corrupt report: " + e.what());
  }
  for (CellResult& c : report.cells) {
    if (!c.ok()) continue;
    const std::filesystem::path errors = dir / c.errors_file();
    try {
      c.errors = parse_errors_csv(read_text(errors));
    } catch (const DataError& e) {
      throw DataError(errors.string() + ": " + e.what());
    }
  }
  return report;
}

std::string prediction_svg(const CellResult& cell) {
  std::vector<std::optional<double>> actual, predicted;
  for (const ErrorRow& r : cell.errors) {
    actual.emplace_back(r.actual);
    predicted.push_back(r.predicted);
  }
  const std::string title = std::string(model_display_name(cell.model)) + " " + target_name(cell.target) +
                            ": actual vs predicted";
  return line_chart(title, {{"actual", "#1f77b4"}, {"predicted", "#d62728"}}, {actual, predicted});
}

std::string error_svg(const CellResult& cell) {
  std::vector<std::optional<double>> error;
  for (const ErrorRow& r : cell.errors) error.push_back(r.error);
  const std::string title = std::string(model_display_name(cell.model)) + " " + target_name(cell.target) +
                            ": signed error (predicted - actual)";
  return line_chart(title, {{"error", "#2ca02c"}}, {error});
}

std::size_t write_svg_charts(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::size_t written = 0;
  for (const CellResult& c : report.cells) {
    if (!c.ok()) continue;
    const std::string stem = std::string(model_name(c.model)) + "_" + target_name(c.target);
    write_text(dir / ("prediction_" + stem + ".svg"), prediction_svg(c));
    write_text(dir / ("error_" + stem + ".svg"), error_svg(c));
    written += 2;
  }
  return written;
}

}  // namespace gridcast
