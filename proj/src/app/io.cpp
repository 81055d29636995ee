#include "genrep/app/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "genrep/errors.hpp"

namespace genrep::app {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& msg) {
  throw ParseError(std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

double parse_number(std::string_view field, std::string_view source, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(source, line, "not a finite number: '" + std::string(field) + "'");
  }
  return v;
}

Eigen::Index parse_index(std::string_view field, std::string_view source, std::size_t line) {
  long long v = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || v < 0) {
    fail(source, line, "not a non-negative integer index: '" + std::string(field) + "'");
  }
  return static_cast<Eigen::Index>(v);
}

/// Calls fn(line_number, line) for every non-blank line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    if (!trim(line).empty()) fn(line_no, line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
}

}  // namespace

std::string_view to_string(DType t) {
  switch (t) {
    case DType::Count: return "count";
    case DType::Binary: return "binary";
    case DType::Real: return "real";
  }
  return "?";
}

DType infer_dtype(const Eigen::MatrixXd& m) {
  bool binary = true;
  bool count = true;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (v != 0.0 && v != 1.0) binary = false;
    if (!(v >= 0.0) || v != std::floor(v)) count = false;
  }
  if (binary) return DType::Binary;
  return count ? DType::Count : DType::Real;
}

Dataset parse_dense_csv(std::string_view text, std::string_view source) {
  std::vector<std::vector<double>> rows;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    std::vector<double> row;
    for (auto field : split_fields(line)) row.push_back(parse_number(field, source, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(source, line_no,
           "expected " + std::to_string(rows.front().size()) + " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  });
  if (rows.empty()) throw ParseError(std::string(source) + ": no data rows");
  Dataset out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  out.dtype = infer_dtype(out.values);
  return out;
}

Dataset load_dense_csv(const std::filesystem::path& path) { return parse_dense_csv(read_file(path), path.string()); }

Dataset parse_sparse_triplets(std::string_view text, Eigen::Index rows, Eigen::Index cols, std::string_view source) {
  if (rows <= 0 || cols <= 0) throw ParseError(std::string(source) + ": declared shape must be positive");
  Dataset out;
  out.values = Eigen::MatrixXd::Zero(rows, cols);
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  bool header = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto fields = split_fields(line);
    if (!header) {
      if (fields.size() != 3 || fields[0] != "row" || fields[1] != "col" || fields[2] != "value") {
        fail(source, line_no, "expected header 'row,col,value'");
      }
      header = true;
      return;
    }
    if (fields.size() != 3) fail(source, line_no, "expected 3 fields, found " + std::to_string(fields.size()));
    const auto r = parse_index(fields[0], source, line_no);
    const auto c = parse_index(fields[1], source, line_no);
    const double v = parse_number(fields[2], source, line_no);
    if (r >= rows || c >= cols) {
      fail(source, line_no,
           "index (" + std::to_string(r) + ", " + std::to_string(c) + ") outside shape " + std::to_string(rows) + "x" +
               std::to_string(cols));
    }
    if (!seen.insert({r, c}).second) fail(source, line_no, "duplicate cell (" + std::to_string(r) + ", " + std::to_string(c) + ")");
    out.values(r, c) = v;
    out.entries.push_back({r, c, v});
  });
  if (!header) throw ParseError(std::string(source) + ": missing header 'row,col,value'");
  out.dtype = infer_dtype(out.values);
  return out;
}

Dataset load_sparse_triplets(const std::filesystem::path& path, const std::filesystem::path& shape_path) {
  nlohmann::json shape;
  try {
    shape = nlohmann::json::parse(read_file(shape_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(shape_path.string() + ": " + e.what());
  }
  if (!shape.is_object() || !shape.contains("rows") || !shape.contains("cols") ||
      !shape["rows"].is_number_integer() || !shape["cols"].is_number_integer()) {
    throw ParseError(shape_path.string() + ": expected {\"rows\": R, \"cols\": C}");
  }
  return parse_sparse_triplets(read_file(path), shape["rows"].get<Eigen::Index>(), shape["cols"].get<Eigen::Index>(),
                               path.string());
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericalError("format_double: conversion failed");
  return {buf, ptr};
}

std::string dense_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string triplets_csv(const std::vector<HeldoutEntry>& entries) {
  std::string out = "row,col,value\n";
  for (const auto& e : entries) {
    out += std::to_string(e.row) + ',' + std::to_string(e.col) + ',' + format_double(e.value) + '\n';
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp.string() + ": cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error(tmp.string() + ": write failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace genrep::app
