#pragma once

// CSV matrices, coordinate tables, 16-bit PGM heatmaps and staged (atomic)
// output files.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "sensorplace/constraints.hpp"
#include "sensorplace/error.hpp"
#include "sensorplace/numerics.hpp"

namespace sensorplace::io {

/// Failure to open or read a file. Kept apart from Error so the CLI can map
/// it to the usage exit code.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 17 significant digits, enough for any double to reload bit-identically.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view text, const std::string& where) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidInput, where + ": cannot parse '" + std::string(text) + "' as a number");
  }
  return v;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace detail

/// Dense numeric CSV, one row per line. Every row must have the same width.
inline Matrix read_matrix_csv(const std::filesystem::path& path, bool header = false) {
  const auto lines = detail::read_lines(path);
  const std::size_t first = header ? 1 : 0;
  if (lines.size() <= first) throw Error(ErrorCode::InvalidInput, path.string() + ": no data rows");
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size() - first);
  for (std::size_t li = first; li < lines.size(); ++li) {
    const auto fields = detail::split(lines[li]);
    std::vector<double> row;
    row.reserve(fields.size());
    const std::string where = path.string() + ":" + std::to_string(li + 1);
    for (const auto f : fields) row.push_back(detail::parse_double(f, where));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::InvalidInput, where + ": expected " + std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& header = {}) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
    out += '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

/// Coordinate table with a header row; columns picked by name.
inline PointCloud read_coordinates_csv(const std::filesystem::path& path, std::string_view x_column,
                                       std::string_view y_column, std::optional<std::string_view> z_column) {
  const auto lines = detail::read_lines(path);
  if (lines.size() < 2) throw Error(ErrorCode::InvalidInput, path.string() + ": coordinate table needs a header and rows");
  const auto names = detail::split(lines.front());
  auto find = [&](std::string_view name) -> std::size_t {
    for (std::size_t j = 0; j < names.size(); ++j) {
      std::string_view n = detail::trim(names[j]);
      if (n.size() >= 2 && n.front() == '"' && n.back() == '"') n = n.substr(1, n.size() - 2);
      if (n == name) return j;
    }
    throw Error(ErrorCode::InvalidInput, path.string() + ": no column named '" + std::string(name) + "'");
  };
  const std::size_t xi = find(x_column), yi = find(y_column);
  const std::optional<std::size_t> zi = z_column ? std::optional(find(*z_column)) : std::nullopt;

  PointCloud cloud;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = detail::split(lines[li]);
    const std::string where = path.string() + ":" + std::to_string(li + 1);
    if (fields.size() != names.size()) throw Error(ErrorCode::InvalidInput, where + ": wrong column count");
    Point p{detail::parse_double(fields[xi], where), detail::parse_double(fields[yi], where), std::nullopt};
    if (zi) p.z = detail::parse_double(fields[*zi], where);
    cloud.coords.push_back(p);
  }
  return cloud;
}

/// Binary 16-bit PGM (P5, big endian). Values map linearly min -> 0,
/// max -> 65535; the scale goes in a comment line. A constant field is all
/// zeros.
inline std::string to_pgm16(const Vector& values, Index height, Index width) {
  if (static_cast<Index>(values.size()) != height * width) {
    throw Error(ErrorCode::InvalidInput, "PGM size does not match the number of values");
  }
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  std::string out = "P5\n# scale min=" + format_double(lo) + " max=" + format_double(hi) + "\n" +
                    std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  out.reserve(out.size() + 2 * static_cast<std::size_t>(values.size()));
  const double range = hi - lo;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::uint16_t level = 0;
    if (range > 0.0) level = static_cast<std::uint16_t>(std::lround((values(i) - lo) / range * 65535.0));
    out += static_cast<char>(level >> 8);
    out += static_cast<char>(level & 0xFF);
  }
  return out;
}

/// Collects output files as temporaries in the target directory and renames
/// them into place on commit(). Anything not committed is removed.
class StagedOutput {
 public:
  explicit StagedOutput(std::filesystem::path dir) : dir_(std::move(dir)) {}
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  ~StagedOutput() {
    std::error_code ec;
    for (const auto& [tmp, final_path] : files_) std::filesystem::remove(tmp, ec);
  }

  void add(const std::string& name, std::string_view content) {
    std::filesystem::create_directories(dir_);
    const auto final_path = dir_ / name;
    auto tmp = final_path;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
    files_.emplace_back(std::move(tmp), final_path);
  }

  void commit() {
    for (const auto& [tmp, final_path] : files_) std::filesystem::rename(tmp, final_path);
    files_.clear();
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> files_;
};

}  // namespace sensorplace::io
