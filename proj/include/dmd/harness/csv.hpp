#pragma once

// Metrics CSV schema, shortest round-trip number formatting and atomic file writes.

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dmd/diagnostics.hpp"

namespace dmd::harness {

inline constexpr int kCsvSchemaVersion = 1;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
/// Strict full-string parse; throws ValidationError naming `what`.
double parse_double(std::string_view text, std::string_view what);
long parse_long(std::string_view text, std::string_view what);

const std::vector<std::string>& metrics_columns();
std::string metrics_header(bool with_label = false);
std::string metrics_row(const diagnostics::MetricsRecord& r, std::string_view label = {});
std::string metrics_csv(const std::vector<diagnostics::MetricsRecord>& records);

/// Parses a file written by metrics_csv (no label column).
std::vector<diagnostics::MetricsRecord> parse_metrics_csv(const std::string& text);

/// Writes to a sibling temporary file and renames it over `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Dense matrix as comma-separated rows; vectors are one value per line.
std::string matrix_csv(const Eigen::MatrixXd& m);
Eigen::MatrixXd parse_matrix_csv(const std::string& text, std::string_view what);

}  // namespace dmd::harness
