#ifndef EXCIREC_COMMON_HPP
#define EXCIREC_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace excirec {

using Vec3 = Eigen::Vector3d;

// Row-major single-precision matrices are the storage layout of datasets
// and network activations; physics computations stay in double.
using MatrixXfRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixXdRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error hierarchy. The CLI maps these onto exit codes:
//   config_error / invalid_input / format_error -> 2
//   numerical_error (incl. singularity_error)   -> 3
//   convergence_error                           -> 4
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class config_error : public error {
 public:
  explicit config_error(const std::string& msg) : error(msg) {}
};

class invalid_input : public error {
 public:
  explicit invalid_input(const std::string& msg) : error(msg) {}
};

class numerical_error : public error {
 public:
  explicit numerical_error(const std::string& msg) : error(msg) {}
};

class singularity_error : public numerical_error {
 public:
  explicit singularity_error(const std::string& msg) : numerical_error(msg) {}
};

class format_error : public error {
 public:
  explicit format_error(const std::string& msg) : error(msg) {}
};

class convergence_error : public error {
 public:
  explicit convergence_error(const std::string& msg) : error(msg) {}
};

}  // namespace excirec

#endif
