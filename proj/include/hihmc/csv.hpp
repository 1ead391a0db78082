#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hihmc::csv {

/// Shortest "%.17g" rendering; round-trips every finite double.
std::string format(double value);
std::string format(long value);

/// Comma-delimited, LF-terminated writer. Throws IoError when the file
/// cannot be opened or written.
class Writer {
 public:
  explicit Writer(const std::string& path);

  Writer& row(const std::vector<std::string>& cells);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
};

/// Dense numeric matrix, one row per line. Cells may be separated by commas
/// or whitespace; a leading non-numeric header line and blank lines are
/// skipped. Throws IoError on unreadable files or ragged rows.
Eigen::MatrixXd read_matrix(const std::string& path);

/// Every number in the file, in reading order.
Eigen::VectorXd read_vector(const std::string& path);

}  // namespace hihmc::csv
