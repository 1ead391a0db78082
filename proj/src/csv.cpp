#include "hihmc/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "hihmc/errors.hpp"

namespace hihmc::csv {

namespace {

// Splits on commas and whitespace. Returns false if any cell is not a number.
bool parse_numbers(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::string cell;
  auto flush = [&]() -> bool {
    if (cell.empty()) return true;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || errno == ERANGE) return false;
    out.push_back(v);
    cell.clear();
    return true;
  };
  for (char ch : line) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r') {
      if (!flush()) return false;
    } else {
      cell.push_back(ch);
    }
  }
  return flush();
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::vector<double> values;
  bool first = true;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const bool ok = parse_numbers(line, values);
    if (!ok) {
      if (first) {
        first = false;
        continue;
      }
      throw IoError(path + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    first = false;
    if (!values.empty()) rows.push_back(values);
  }
  return rows;
}

}  // namespace

std::string format(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format(long value) { return std::to_string(value); }

Writer::Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
}

Writer& Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_.put(',');
    out_ << cells[i];
  }
  out_.put('\n');
  if (!out_) throw IoError("write to " + path_ + " failed");
  return *this;
}

void Writer::close() {
  out_.close();
  if (out_.fail()) throw IoError("closing " + path_ + " failed");
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw IoError(path + " holds no numeric rows");
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw IoError(path + ": row " + std::to_string(i + 1) + " has " +
                    std::to_string(rows[i].size()) + " cells, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Eigen::VectorXd read_vector(const std::string& path) {
  const auto rows = read_rows(path);
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  if (flat.empty()) throw IoError(path + " holds no numbers");
  return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

}  // namespace hihmc::csv
