#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "excirec/geometry.hpp"
#include "excirec/nearfield.hpp"

namespace excirec {
namespace baseline {

enum class Method { nelder_mead, differential_evolution, gp_surrogate };

struct BaselineProblem {
  Eigen::VectorXd target;  // spectrum at the scan positions
  AggregateGeometry geometry;
  TipScan scan;
  double lower = -1.0;  // per-coefficient box
  double upper = 1.0;
  int max_iterations = 1000;  // one cost evaluation per iteration
  double target_cost = 1e-10;
};

// Mean squared error between the candidate's spectrum and the target; the
// candidate is normalized to unit norm first, so the cost is invariant to
// overall scale and sign.
double cost(const Eigen::VectorXd& candidate, const BaselineProblem& problem);

struct Result {
  Eigen::VectorXd candidate;  // unit norm, canonical sign
  double best_cost = 0.0;
  int iterations = 0;  // cost evaluations spent
  bool converged = false;
  std::vector<double> trace;  // best-so-far cost after each evaluation
};

// Engine entry point with a pluggable objective, used directly by tests.
struct Options {
  int dim = 0;
  double lower = -1.0;
  double upper = 1.0;
  int max_evaluations = 1000;
  double target_cost = 1e-10;
  std::uint64_t seed = 0;
};

Result minimize_function(const std::function<double(const Eigen::VectorXd&)>& f,
                         Method method, const Options& options);

Result minimize(const BaselineProblem& problem, Method method,
                std::uint64_t seed);

}  // namespace baseline
}  // namespace excirec
