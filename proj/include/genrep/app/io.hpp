#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "genrep/metrics.hpp"

namespace genrep::app {

enum class DType { Count, Binary, Real };

std::string_view to_string(DType t);

struct Dataset {
  Eigen::MatrixXd values;
  DType dtype = DType::Real;
  /// Source entries when loaded from triplets, in file order.
  std::vector<HeldoutEntry> entries;
};

/// The narrowest dtype that describes every value.
DType infer_dtype(const Eigen::MatrixXd& m);

/// Comma-separated, no header, one row per line. Throws ParseError naming
/// the file and 1-based line on a malformed number or ragged row.
Dataset load_dense_csv(const std::filesystem::path& path);
Dataset parse_dense_csv(std::string_view text, std::string_view source = "<input>");

/// Header "row,col,value" followed by zero-based triplets; the shape comes
/// from a JSON sidecar {"rows": R, "cols": C}. Duplicate cells and indices
/// outside the shape are ParseErrors.
Dataset load_sparse_triplets(const std::filesystem::path& path, const std::filesystem::path& shape_path);
Dataset parse_sparse_triplets(std::string_view text, Eigen::Index rows, Eigen::Index cols,
                              std::string_view source = "<input>");

/// Shortest decimal string that round-trips the double.
std::string format_double(double v);

std::string dense_csv(const Eigen::MatrixXd& m);
std::string triplets_csv(const std::vector<HeldoutEntry>& entries);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it
/// into place, so a reader never sees a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace genrep::app
