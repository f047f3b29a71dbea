#include "excirec/exciton.hpp"

#include <cmath>

#include "excirec/rng.hpp"

namespace excirec {

DisorderRealization sample_disorder(const DisorderSpec& spec,
                                    const AggregateGeometry& geometry) {
  if (!std::isfinite(spec.sigma_d) || spec.sigma_d < 0.0)
    throw config_error("sigma_d must be finite and non-negative");
  if (!std::isfinite(spec.sigma_od) || spec.sigma_od < 0.0)
    throw config_error("sigma_od must be finite and non-negative");

  const int n = geometry.size();
  DisorderRealization r;
  r.delta_eps = Eigen::VectorXd::Zero(n);
  r.delta_bracket = Eigen::MatrixXd::Zero(n, n);
  if (spec.sigma_d == 0.0 && spec.sigma_od == 0.0) return r;

  const double scale = n > 1 ? max_abs_coupling(geometry) : 1.0;
  Rng rng(spec.seed);
  // Draw order is part of the determinism contract: diagonal first, then the
  // upper triangle row by row.
  if (spec.sigma_d > 0.0) {
    const double sd = spec.sigma_d * scale;
    for (int m = 0; m < n; ++m) r.delta_eps[m] = sd * rng.gaussian();
  }
  if (spec.sigma_od > 0.0) {
    const double sod = spec.sigma_od * scale;
    for (int m = 0; m < n; ++m)
      for (int k = m + 1; k < n; ++k) {
        const double v = sod * rng.gaussian();
        r.delta_bracket(m, k) = v;
        r.delta_bracket(k, m) = v;
      }
  }
  return r;
}

Hamiltonian build_hamiltonian(const AggregateGeometry& geometry,
                              const DisorderRealization& realization,
                              double site_energy) {
  const int n = geometry.size();
  if (realization.delta_eps.size() != n ||
      realization.delta_bracket.rows() != n ||
      realization.delta_bracket.cols() != n)
    throw invalid_input("disorder realization does not match geometry size");

  Hamiltonian h;
  h.matrix = Eigen::MatrixXd::Zero(n, n);
  for (int m = 0; m < n; ++m)
    h.matrix(m, m) = site_energy + realization.delta_eps[m];
  for (int m = 0; m < n; ++m)
    for (int k = m + 1; k < n; ++k) {
      const double r3 =
          std::pow((geometry.positions[k] - geometry.positions[m]).norm(), 3);
      const double v =
          coupling(geometry, m, k) + realization.delta_bracket(m, k) / r3;
      h.matrix(m, k) = v;
      h.matrix(k, m) = v;
    }
  return h;
}

Hamiltonian build_hamiltonian(const AggregateGeometry& geometry,
                              double site_energy) {
  DisorderRealization none;
  none.delta_eps = Eigen::VectorXd::Zero(geometry.size());
  none.delta_bracket = Eigen::MatrixXd::Zero(geometry.size(), geometry.size());
  return build_hamiltonian(geometry, none, site_energy);
}

EigenSystem diagonalize(const Hamiltonian& h) {
  const int n = h.n();
  if (n < 1) throw invalid_input("empty Hamiltonian");
  if ((h.matrix - h.matrix.transpose()).cwiseAbs().maxCoeff() > 1e-14)
    throw invalid_input("Hamiltonian is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
  if (solver.info() != Eigen::Success)
    throw numerical_error("eigensolver failed to converge");

  EigenSystem es;
  es.energies = solver.eigenvalues();
  es.coefficients.resize(n, n);
  for (int l = 0; l < n; ++l)
    es.coefficients.row(l) = canonicalize_sign(solver.eigenvectors().col(l));
  for (int l = 0; l + 1 < n; ++l)
    if (es.energies[l + 1] - es.energies[l] < 1e-12) es.degenerate = true;
  return es;
}

Eigen::VectorXd canonicalize_sign(const Eigen::VectorXd& c) {
  const int n = static_cast<int>(c.size());
  int best = -1;
  double best_abs = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(c[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (best < 0) throw invalid_input("cannot canonicalize a zero vector");
  return c[best] < 0.0 ? Eigen::VectorXd(-c) : c;
}

}  // namespace excirec
