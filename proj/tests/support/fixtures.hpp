#pragma once

#include "gridcast/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fixtures {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("gridcast-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Half-hourly series starting at 2023-05-01T00:00+09:30 with the given columns.
inline gridcast::RawSeries make_series(const std::vector<double>& price, const std::vector<double>& demand) {
  gridcast::RawSeries raw;
  const auto start = gridcast::parse_timestamp("2023-05-01T00:00:00+09:30");
  for (std::size_t i = 0; i < price.size(); ++i) {
    raw.timestamps.push_back({start.epoch_seconds + static_cast<std::int64_t>(1800 * i), start.offset_minutes});
  }
  raw.price = price;
  raw.demand = demand;
  return raw;
}

}  // namespace fixtures
