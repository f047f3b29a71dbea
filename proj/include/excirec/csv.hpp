#pragma once

#include <string>

#include <Eigen/Dense>

namespace excirec {

// All writers emit full double precision; `header` is a literal first line
// (empty: none). Readers accept comma/whitespace separated numbers and skip
// a leading non-numeric header line; anything else is a format error.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::string& header = "");
void write_vector_csv(const std::string& path, const Eigen::VectorXd& v,
                      const std::string& header = "");
Eigen::VectorXd read_vector_csv(const std::string& path);

}  // namespace excirec
