#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "confcov/linalg.hpp"

namespace confcov {

/// 17 significant digits, same text as printf("%.17g"); round-trips every finite double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_matrix(std::ostream& out, const Eigen::Ref<const Matrix>& m) {
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(m(i, j));
    }
    line += '\n';
    out << line;
  }
}

inline void write_matrix(const std::string& path, const Eigen::Ref<const Matrix>& m) {
  std::ofstream out(path, std::ios::binary);
  detail::require(static_cast<bool>(out), ErrorCode::IoError, "cannot open " + path + " for writing");
  write_matrix(out, m);
  detail::require(static_cast<bool>(out), ErrorCode::IoError, "write failed for " + path);
}

/// Parse a headerless numeric CSV. Errors name 1-based line and column numbers.
inline Matrix read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    std::size_t column = 1;
    while (true) {
      const std::size_t end = line.find(',', start);
      std::string_view field(line.data() + start, (end == std::string::npos ? line.size() : end) - start);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      if (!field.empty() && field.front() == '+') field.remove_prefix(1);
      double value = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        detail::fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ", column " +
                                                std::to_string(column) + ": not a number: '" +
                                                std::string(field) + "'");
      }
      row.push_back(value);
      if (end == std::string::npos) break;
      start = end + 1;
      ++column;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      detail::fail(ErrorCode::ShapeError, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(rows.front().size()) + " columns, got " +
                                              std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  detail::require(!rows.empty(), ErrorCode::ShapeError, "matrix file is empty");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

inline Matrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path);
  return read_matrix(in);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  detail::require(static_cast<bool>(out), ErrorCode::IoError, "cannot open " + path + " for writing");
  out << text;
  detail::require(static_cast<bool>(out), ErrorCode::IoError, "write failed for " + path);
}

}  // namespace confcov
