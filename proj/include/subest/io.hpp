#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <Eigen/Dense>

namespace subest::io {

/// Matrix CSV: a "# rows cols" header line, then one comma-separated row per
/// line, each value printed with 17 significant digits.
std::string format_matrix_csv(const Eigen::MatrixXd& m);
Eigen::MatrixXd parse_matrix_csv(const std::string& text);

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// 17-significant-digit decimal rendering of a double.
std::string format_double(double value);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Plain key=value file; '#' starts a comment, blank lines are skipped.
/// Duplicate keys keep the last value.
std::map<std::string, std::string> parse_key_values(const std::string& text);

}  // namespace subest::io
