#include "lfire/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

#include "lfire/error.hpp"

namespace lfire {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  if (last - first >= 3 && std::string(first, 3) == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (last - first >= 3 && std::string(first, 3) == "inf") return std::numeric_limits<double>::infinity();
  if (last - first >= 4 && std::string(first, 4) == "-inf") return -std::numeric_limits<double>::infinity();
  const auto r = std::from_chars(first, last, v);
  if (r.ec != std::errc() || r.ptr != last) throw ConfigError(path.string() + ": cannot parse number '" + s + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

Eigen::MatrixXd parse_rows(const std::vector<std::string>& lines, std::size_t first,
                           const std::filesystem::path& path) {
  const auto n = static_cast<Eigen::Index>(lines.size() - first);
  if (n == 0) return {};
  const auto cols = static_cast<Eigen::Index>(split_line(lines[first]).size());
  Eigen::MatrixXd m(n, cols);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto cells = split_line(lines[first + static_cast<std::size_t>(i)]);
    if (static_cast<Eigen::Index>(cells.size()) != cols) throw ConfigError(path.string() + ": ragged rows");
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = parse_double(cells[static_cast<std::size_t>(j)], path);
  }
  return m;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) { return parse_rows(read_lines(path), 0, path); }

void write_table_csv(const std::filesystem::path& path, const Table& t) {
  if (static_cast<Eigen::Index>(t.header.size()) != t.rows.cols()) throw ConfigError("table header/column mismatch");
  auto out = open_out(path);
  for (std::size_t j = 0; j < t.header.size(); ++j) out << (j ? "," : "") << t.header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < t.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.rows.cols(); ++j) out << (j ? "," : "") << format_double(t.rows(i, j));
    out << '\n';
  }
}

Table read_table_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ConfigError(path.string() + ": empty table");
  Table t;
  t.header = split_line(lines[0]);
  t.rows = parse_rows(lines, 1, path);
  if (t.rows.size() == 0) t.rows.resize(0, static_cast<Eigen::Index>(t.header.size()));
  if (t.rows.cols() != static_cast<Eigen::Index>(t.header.size())) throw ConfigError(path.string() + ": header mismatch");
  return t;
}

void write_text_table_csv(const std::filesystem::path& path, const TextTable& t) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < t.header.size(); ++j) out << (j ? "," : "") << t.header[j];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  auto out = open_out(path);
  out << content;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lfire
