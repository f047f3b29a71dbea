#include "excirec/csv.hpp"

#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "excirec/common.hpp"

namespace excirec {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw format_error("cannot open " + path + " for writing");
  out.precision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::string& header) {
  auto out = open_out(path);
  if (!header.empty()) out << header << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out) throw format_error("short write to " + path);
}

void write_vector_csv(const std::string& path, const Eigen::VectorXd& v,
                      const std::string& header) {
  auto out = open_out(path);
  if (!header.empty()) out << header << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
  if (!out) throw format_error("short write to " + path);
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw format_error("cannot open " + path);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (auto& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream row(line);
    std::string token;
    while (row >> token) {
      try {
        size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        values.push_back(v);
      } catch (const std::exception&) {
        // A non-numeric first line is a header; any later one is corrupt.
        if (line_no == 1 && values.empty()) {
          while (row >> token) {
          }
          break;
        }
        std::ostringstream msg;
        msg << "non-numeric token '" << token << "' at " << path << ":"
            << line_no;
        throw format_error(msg.str());
      }
    }
  }
  if (values.empty()) throw format_error("no numeric data in " + path);
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

}  // namespace excirec
