#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "piw/errors.hpp"

namespace piw {

// %.17g formatting; 17 significant digits round-trip doubles losslessly.
std::string format_double(double x);

// Rectangular numeric CSV (row-major, comma separated). A first line that is
// not fully numeric is treated as a header and skipped. An optional leading
// non-numeric column supplies row labels (returned via row_ids when asked).
Eigen::MatrixXd read_matrix_csv(std::istream& in, std::vector<std::string>* row_ids = nullptr);
Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* row_ids = nullptr);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});

}  // namespace piw
