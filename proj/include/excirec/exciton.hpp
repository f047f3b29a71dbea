#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "excirec/common.hpp"
#include "excirec/geometry.hpp"

namespace excirec {

struct DisorderSpec {
  double sigma_d = 0.0;   // diagonal std, units of max|V|
  double sigma_od = 0.0;  // off-diagonal std, same units
  std::uint64_t seed = 0;
};

// delta_bracket holds the additive term inside the coupling bracket; the
// Hamiltonian perturbation is delta_bracket(m,n) / R_mn^3.
struct DisorderRealization {
  Eigen::VectorXd delta_eps;
  Eigen::MatrixXd delta_bracket;
};

struct Hamiltonian {
  Eigen::MatrixXd matrix;
  int n() const { return static_cast<int>(matrix.rows()); }
};

struct EigenSystem {
  Eigen::VectorXd energies;      // ascending
  Eigen::MatrixXd coefficients;  // row l = c^(l), sign-canonicalized
  bool degenerate = false;       // some |E_i - E_j| < 1e-12
  int n() const { return static_cast<int>(energies.size()); }
};

DisorderRealization sample_disorder(const DisorderSpec& spec,
                                    const AggregateGeometry& geometry);

Hamiltonian build_hamiltonian(const AggregateGeometry& geometry,
                              const DisorderRealization& realization,
                              double site_energy = 0.0);

// Clean Hamiltonian, no disorder.
Hamiltonian build_hamiltonian(const AggregateGeometry& geometry,
                              double site_energy = 0.0);

EigenSystem diagonalize(const Hamiltonian& h);

// Flips the sign so the largest-|c| entry is positive; ties take the lowest
// index. Throws invalid_input on a zero vector.
Eigen::VectorXd canonicalize_sign(const Eigen::VectorXd& c);

}  // namespace excirec
