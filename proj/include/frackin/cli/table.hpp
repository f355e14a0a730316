#ifndef FRACKIN_CLI_TABLE_HPP
#define FRACKIN_CLI_TABLE_HPP

// CSV tables and JSON sidecars. Reals are written with 17 significant digits
// so that parsing the file back gives the same bits; a missing cell (NaN) is
// written empty.

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "frackin/error.hpp"

#ifndef FRACKIN_GIT_DESCRIBE
#define FRACKIN_GIT_DESCRIBE "unknown"
#endif

namespace frackin::cli {

class IoError : public Error {
public:
  using Error::Error;
};

inline constexpr std::string_view git_describe() { return FRACKIN_GIT_DESCRIBE; }

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) {
      throw Error("table row has " + std::to_string(row.size()) + " cells for " +
                  std::to_string(columns.size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
};

inline constexpr double missing = std::numeric_limits<double>::quiet_NaN();

/// %.17g, with -0 printed as 0 and NaN as an empty cell.
inline std::string format_real(double x) {
  if (std::isnan(x)) {
    return {};
  }
  if (!std::isfinite(x)) {
    throw Error("table cells must be finite");
  }
  if (x == 0.0) {
    x = 0.0;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_csv(const Table& t) {
  if (t.columns.empty()) {
    throw Error("table needs at least one column");
  }
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (t.columns[c].find_first_of(",\"\n") != std::string::npos) {
      throw Error("column name '" + t.columns[c] + "' needs quoting");
    }
    out += (c ? "," : "") + t.columns[c];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_real(row[c]);
    }
    out += '\n';
  }
  return out;
}

/// Inverse of to_csv.
inline Table parse_csv(std::string_view text) {
  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cells.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    return cells;
  };
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') {
      lines.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  if (start != text.size() || lines.empty()) {
    throw Error("CSV must end with a newline and carry a header");
  }
  Table t;
  for (auto c : split(lines[0])) {
    t.columns.emplace_back(c);
  }
  for (std::size_t r = 1; r < lines.size(); ++r) {
    std::vector<double> row;
    for (auto c : split(lines[r])) {
      if (c.empty()) {
        row.push_back(missing);
        continue;
      }
      double x = 0.0;
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), x);
      if (ec != std::errc() || p != c.data() + c.size()) {
        throw Error("CSV row " + std::to_string(r) + ": bad number '" + std::string(c) + "'");
      }
      row.push_back(x);
    }
    t.add(std::move(row));
  }
  return t;
}

/// Writes to a sibling temporary and renames it over `path`, so readers see
/// either the old file or the complete new one.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError(path.parent_path().string() + ": " + ec.message());
    }
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw IoError(tmp.string() + ": cannot open for writing");
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      fs::remove(tmp, ec);
      throw IoError(tmp.string() + ": write failed");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(path.string() + ": cannot move the finished file into place");
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError(path.string() + ": cannot open");
  }
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Replaces -0 by 0 in every number of a JSON tree.
inline void scrub_negative_zero(nlohmann::ordered_json& j) {
  if (j.is_number_float() && j.get<double>() == 0.0) {
    j = 0.0;
  } else if (j.is_structured()) {
    for (auto& x : j) {
      scrub_negative_zero(x);
    }
  }
}

inline std::string json_text(nlohmann::ordered_json j) {
  scrub_negative_zero(j);
  return j.dump(2) + "\n";
}

/// Writes the CSV and a sidecar `<csv stem>.json` holding the scenario echo,
/// the build's git describe string and a metric summary.
inline void emit_table(const Table& t, const std::filesystem::path& csv,
                       const nlohmann::ordered_json& scenario, const nlohmann::ordered_json& summary) {
  write_atomic(csv, to_csv(t));
  nlohmann::ordered_json side;
  side["scenario"] = scenario;
  side["git_describe"] = std::string(git_describe());
  side["columns"] = t.columns;
  side["rows"] = t.rows.size();
  side["summary"] = summary;
  auto json_path = csv;
  json_path.replace_extension(".json");
  write_atomic(json_path, json_text(side));
}

} // namespace frackin::cli

#endif // FRACKIN_CLI_TABLE_HPP
