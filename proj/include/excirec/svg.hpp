#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace excirec {

// Minimal self-contained renderings for quick inspection; CSV files remain
// the primary output format.
void write_line_svg(const std::string& path, const Eigen::VectorXd& x,
                    const std::vector<Eigen::VectorXd>& series,
                    const std::string& title);

void write_heatmap_svg(const std::string& path, const Eigen::MatrixXd& m,
                       const std::string& title);

}  // namespace excirec
