#include "subest/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "subest/error.hpp"

namespace subest::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& token) {
  const std::string t = trim(token);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty(), ErrorKind::Io,
          "bad numeric field '" + t + "'");
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_matrix_csv(const Eigen::MatrixXd& m) {
  std::string out = "# " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io, "empty matrix file");
  long rows = -1, cols = -1;
  {
    std::istringstream header(line);
    char hash = 0;
    header >> hash >> rows >> cols;
    require(hash == '#' && rows >= 0 && cols >= 0 && !header.fail(), ErrorKind::Io,
            "matrix header must read '# rows cols'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io,
            "matrix file has fewer rows than its header");
    std::vector<std::string> fields;
    std::string field;
    std::istringstream row(line);
    while (std::getline(row, field, ',')) fields.push_back(field);
    require(static_cast<long>(fields.size()) == cols, ErrorKind::Io,
            "row " + std::to_string(i) + " has " + std::to_string(fields.size()) + " fields");
    for (long j = 0; j < cols; ++j) m(i, j) = parse_double(fields[j]);
  }
  return m;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  require(!out.fail(), ErrorKind::Io, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  write_text(path, format_matrix_csv(m));
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(read_text(path));
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    require(eq != std::string::npos && eq > 0, ErrorKind::InvalidArgument,
            "config line " + std::to_string(line_no) + " is not key=value");
    values[trim(content.substr(0, eq))] = trim(content.substr(eq + 1));
  }
  return values;
}

}  // namespace subest::io
