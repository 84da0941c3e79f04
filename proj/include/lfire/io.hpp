#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lfire {

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

/// Plain numeric CSV: one row per matrix row, no header.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Header plus numeric rows.
struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd rows;
};
void write_table_csv(const std::filesystem::path& path, const Table& t);
Table read_table_csv(const std::filesystem::path& path);

/// Header plus string rows, for tidy tables mixing labels and numbers.
struct TextTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
void write_text_table_csv(const std::filesystem::path& path, const TextTable& t);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lfire
