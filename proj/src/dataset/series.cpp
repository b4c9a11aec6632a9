#include "gridcast/dataset.hpp"
#include "gridcast/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gridcast {
namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

double parse_cell(std::string_view s) {
  double v = std::numeric_limits<double>::quiet_NaN();
  if (s.empty()) return v;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return v;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  const auto fail = [&]() -> Timestamp {
    throw DataError("unparseable timestamp: '" + std::string(text) + "'");
  };
  text = trim(text);
  // YYYY-MM-DD[T ]HH:MM
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':') {
    return fail();
  }
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5, 2), month) ||
      !parse_int(text.substr(8, 2), day) || !parse_int(text.substr(11, 2), hour) ||
      !parse_int(text.substr(14, 2), minute)) {
    return fail();
  }
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (text.size() < pos + 3 || !parse_int(text.substr(pos + 1, 2), second)) return fail();
    pos += 3;
    // Fractional seconds are accepted and ignored.
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }
  }
  int offset = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z' && pos + 1 == text.size()) {
      offset = 0;
    } else if ((sign == '+' || sign == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
      int oh = 0, om = 0;
      if (!parse_int(text.substr(pos + 1, 2), oh) || !parse_int(text.substr(pos + 4, 2), om)) {
        return fail();
      }
      offset = (sign == '-' ? -1 : 1) * (oh * 60 + om);
    } else {
      return fail();
    }
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60 || hour < 0 || minute < 0) {
    return fail();
  }
  const std::int64_t local = sys_days{ymd}.time_since_epoch().count() * 86400LL + hour * 3600LL +
                             minute * 60LL + second;
  return Timestamp{local - 60LL * offset, offset};
}

std::string format_timestamp(const Timestamp& ts) {
  using namespace std::chrono;
  const std::int64_t local = ts.local_seconds();
  const std::int64_t days = (local >= 0 ? local : local - 86399) / 86400;
  const std::int64_t secs = local - days * 86400;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  const int off = std::abs(ts.offset_minutes);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d%c%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60),
                static_cast<int>(secs % 60), ts.offset_minutes < 0 ? '-' : '+', off / 60, off % 60);
  return buf;
}

LocalCalendar local_calendar(const Timestamp& ts) {
  using namespace std::chrono;
  const std::int64_t local = ts.local_seconds();
  const std::int64_t days = (local >= 0 ? local : local - 86399) / 86400;
  const std::int64_t secs = local - days * 86400;
  const sys_days sd{std::chrono::days{days}};
  const year_month_day ymd{sd};
  const year_month_day_last last{ymd.year(), month_day_last{ymd.month()}};
  const weekday wd{sd};
  LocalCalendar cal{};
  cal.year = static_cast<int>(ymd.year());
  cal.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  cal.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  cal.weekday = static_cast<int>(wd.iso_encoding()) - 1;
  cal.hour = static_cast<double>(secs) / 3600.0;
  cal.days_in_month = static_cast<int>(static_cast<unsigned>(last.day()));
  return cal;
}

RawSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open input file: " + path.string());
  }
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(where + ": empty file");
  }
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = split_fields(line);
  const auto find_col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto require = [&](std::string_view name) {
    auto idx = find_col(name);
    if (!idx) throw DataError(where + ": missing column: " + std::string(name));
    return *idx;
  };
  const std::size_t ts_col = require("settlement_time");
  const std::size_t price_col = require("price");
  const std::size_t demand_col = require("demand");
  std::vector<std::pair<std::string, std::size_t>> extra;
  for (const char* name : kPredispatchColumns) {
    if (auto idx = find_col(name)) extra.emplace_back(name, *idx);
  }

  struct Record {
    Timestamp ts;
    std::size_t line;
    double price;
    double demand;
    std::vector<double> extra;
  };
  std::vector<Record> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const auto cell = [&](std::size_t i) -> std::string_view {
      return i < fields.size() ? fields[i] : std::string_view{};
    };
    Record r;
    try {
      r.ts = parse_timestamp(cell(ts_col));
    } catch (const DataError& e) {
      throw DataError(where + ": row " + std::to_string(line_no) + ": " + e.what());
    }
    r.line = line_no;
    r.price = parse_cell(cell(price_col));
    r.demand = parse_cell(cell(demand_col));
    for (const auto& [name, idx] : extra) r.extra.push_back(parse_cell(cell(idx)));
    records.push_back(std::move(r));
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const Record& a, const Record& b) { return a.ts < b.ts; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].ts == records[i - 1].ts) {
      throw DataError(where + ": duplicate timestamp " + format_timestamp(records[i].ts) + " at row " +
                      std::to_string(records[i].line));
    }
  }
  if (records.size() >= 2) {
    const std::int64_t step = records[1].ts.epoch_seconds - records[0].ts.epoch_seconds;
    for (std::size_t i = 2; i < records.size(); ++i) {
      if (records[i].ts.epoch_seconds - records[i - 1].ts.epoch_seconds != step) {
        throw DataError(where + ": non-uniform interval spacing at row " +
                        std::to_string(records[i].line) + " (" + format_timestamp(records[i].ts) + ")");
      }
    }
  }

  RawSeries raw;
  raw.timestamps.reserve(records.size());
  for (const auto& [name, idx] : extra) raw.predispatch[name].reserve(records.size());
  for (const auto& r : records) {
    raw.timestamps.push_back(r.ts);
    raw.price.push_back(r.price);
    raw.demand.push_back(r.demand);
    for (std::size_t k = 0; k < extra.size(); ++k) raw.predispatch[extra[k].first].push_back(r.extra[k]);
  }
  return raw;
}

namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void write_csv(const RawSeries& raw, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write file: " + path.string());
  }
  std::vector<const std::vector<double>*> extra;
  out << "settlement_time,price,demand";
  for (const char* name : kPredispatchColumns) {
    if (auto it = raw.predispatch.find(name); it != raw.predispatch.end()) {
      out << ',' << name;
      extra.push_back(&it->second);
    }
  }
  out << '\n';
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out << format_timestamp(raw.timestamps[i]) << ',' << format_number(raw.price[i]) << ','
        << format_number(raw.demand[i]);
    for (const auto* col : extra) out << ',' << format_number((*col)[i]);
    out << '\n';
  }
}

const char* target_name(Target t) { return t == Target::price ? "price" : "demand"; }

}  // namespace gridcast
