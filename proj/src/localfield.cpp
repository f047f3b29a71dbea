#include "excirec/localfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace excirec {

LocalFieldSystem make_local_field_system(const AggregateGeometry& geometry,
                                         const LocalFieldParams& params) {
  if (params.spacing_nm <= 0.0) throw config_error("spacing_nm must be positive");
  if (params.mu_debye <= 0.0) throw config_error("mu_debye must be positive");
  if (params.gamma_m <= 0.0) throw config_error("gamma_m must be positive");
  if (params.tip.a_r <= 0.0) throw config_error("tip radius must be positive");
  if (params.tip.eps_env <= 0.0) throw config_error("eps_env must be positive");

  LocalFieldSystem sys;
  sys.tip = params.tip;
  const int n = geometry.size();
  sys.positions.reserve(n);
  sys.resonances.reserve(n);
  for (int m = 0; m < n; ++m) {
    sys.positions.push_back(params.spacing_nm * geometry.positions[m]);
    MolecularResonance res;
    res.omega_m = params.omega_m;
    res.gamma_m = params.gamma_m;
    res.mu = params.mu_debye * geometry.dipoles[m];
    sys.resonances.push_back(res);
  }
  return sys;
}

std::complex<double> drude_epsilon(double omega, const TipModel& tip) {
  if (omega <= 0.0) throw invalid_input("drude_epsilon requires omega > 0");
  const double gamma_size = tip.gamma_p + tip.v_F / (tip.a_r * 1e-7) * kRadPerSecToCm;
  const std::complex<double> i(0.0, 1.0);
  const double wp2 = tip.omega_p * tip.omega_p;
  return tip.eps_b + wp2 / (omega * (omega - i * tip.gamma_p)) -
         wp2 / (omega * (omega - i * gamma_size));
}

Eigen::Matrix3cd tip_polarizability(double omega, const TipModel& tip) {
  const std::complex<double> eps = drude_epsilon(omega, tip);
  const std::complex<double> denom = eps + 2.0 * tip.eps_env;
  if (std::abs(denom) < 1e-12) {
    std::ostringstream msg;
    msg << "tip plasmon pole (eps + 2 eps_env = 0) at omega = " << omega;
    throw singularity_error(msg.str());
  }
  const double a3 = tip.a_r * tip.a_r * tip.a_r;
  return (-a3 * (eps - tip.eps_env) / denom) * Eigen::Matrix3cd::Identity();
}

Eigen::Matrix3cd molecular_polarizability(double omega,
                                          const MolecularResonance& res) {
  const std::complex<double> denom(omega - res.omega_m, res.gamma_m);
  return (-kDipoleCouplingCm / denom) *
         (res.mu * res.mu.transpose()).cast<std::complex<double>>();
}

Eigen::Matrix3d dipole_tensor(const Vec3& r_m, const Vec3& r_n) {
  const Vec3 r = r_m - r_n;
  const double dist2 = r.squaredNorm();
  if (dist2 == 0.0)
    throw singularity_error("dipole tensor for coincident particles");
  const double dist = std::sqrt(dist2);
  return (Eigen::Matrix3d::Identity() - 3.0 / dist2 * (r * r.transpose())) /
         (dist2 * dist);
}

namespace {

// Shared assembly for the 3(N+1) system (I + alpha T) P = alpha E^ext.
// Molecule-molecule tensor blocks are precomputed once per system; the tip
// row/column varies with the tip position and the alphas with omega.
struct Workspace {
  explicit Workspace(const LocalFieldSystem& sys)
      : n(sys.n_molecules()), dim(3 * (n + 1)) {
    t_mol.assign(static_cast<size_t>(n) * n, Eigen::Matrix3d::Zero());
    for (int m = 0; m < n; ++m)
      for (int k = 0; k < n; ++k)
        if (m != k)
          t_mol[m * n + k] = dipole_tensor(sys.positions[m], sys.positions[k]);
    t_tip.resize(n);
    matrix.resize(dim, dim);
    rhs.resize(dim);
    e_ext.resize(n);
  }

  void set_tip_position(const LocalFieldSystem& sys, const Vec3& r_dip,
                        const Vec3& d) {
    if (r_dip.z() < sys.tip.a_r)
      throw invalid_input("tip sphere center below one radius above sample");
    for (int m = 0; m < n; ++m) {
      t_tip[m] = dipole_tensor(sys.positions[m], r_dip);
      e_ext[m] = hertz_field(sys.positions[m], r_dip, d);
    }
  }

  void assemble(double omega, const LocalFieldSystem& sys) {
    const Eigen::Matrix3cd a_tip = tip_polarizability(omega, sys.tip);
    matrix.setIdentity();
    rhs.setZero();
    for (int k = 0; k < n; ++k)
      matrix.block<3, 3>(0, 3 * (k + 1)) = a_tip * t_tip[k];
    for (int m = 0; m < n; ++m) {
      const Eigen::Matrix3cd a_m =
          molecular_polarizability(omega, sys.resonances[m]);
      matrix.block<3, 3>(3 * (m + 1), 0) = a_m * t_tip[m];
      for (int k = 0; k < n; ++k)
        if (k != m)
          matrix.block<3, 3>(3 * (m + 1), 3 * (k + 1)) = a_m * t_mol[m * n + k];
      rhs.segment<3>(3 * (m + 1)) = a_m * e_ext[m].cast<std::complex<double>>();
    }
  }

  Eigen::VectorXcd solve(double omega) {
    if (rhs.norm() == 0.0) return Eigen::VectorXcd::Zero(dim);
    lu.compute(matrix);
    Eigen::VectorXcd x = lu.solve(rhs);
    const double resid = (matrix * x - rhs).norm() / rhs.norm();
    if (!x.allFinite() || resid >= 1e-10) {
      std::ostringstream msg;
      msg << "singular local-field system at omega = " << omega
          << " (relative residual " << resid << ", rcond estimate "
          << lu.rcond() << ")";
      throw numerical_error(msg.str());
    }
    return x;
  }

  int n;
  int dim;
  std::vector<Eigen::Matrix3d> t_mol;
  std::vector<Eigen::Matrix3d> t_tip;
  std::vector<Vec3> e_ext;
  Eigen::MatrixXcd matrix;
  Eigen::VectorXcd rhs;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
};

double absorption_from(const Eigen::VectorXcd& p,
                       const std::vector<Vec3>& e_ext) {
  double a = 0.0;
  for (size_t m = 0; m < e_ext.size(); ++m)
    a += p.segment<3>(3 * (m + 1)).imag().dot(e_ext[m]);
  return a;
}

}  // namespace

std::vector<Eigen::Vector3cd> solve_induced_dipoles(double omega,
                                                    const LocalFieldSystem& sys,
                                                    const Vec3& r_dip,
                                                    const Vec3& d) {
  Workspace ws(sys);
  ws.set_tip_position(sys, r_dip, d);
  ws.assemble(omega, sys);
  const Eigen::VectorXcd x = ws.solve(omega);
  std::vector<Eigen::Vector3cd> p(sys.n_molecules() + 1);
  for (int m = 0; m <= sys.n_molecules(); ++m) p[m] = x.segment<3>(3 * m);
  return p;
}

double absorption_at(double omega, const LocalFieldSystem& sys,
                     const Vec3& r_dip, const Vec3& d) {
  Workspace ws(sys);
  ws.set_tip_position(sys, r_dip, d);
  ws.assemble(omega, sys);
  return absorption_from(ws.solve(omega), ws.e_ext);
}

Eigen::MatrixXd physical_hamiltonian(const LocalFieldSystem& sys) {
  const int n = sys.n_molecules();
  Eigen::MatrixXd h(n, n);
  for (int m = 0; m < n; ++m) {
    h(m, m) = sys.resonances[m].omega_m;
    for (int k = m + 1; k < n; ++k) {
      const double v = kDipoleCouplingCm *
                       sys.resonances[m].mu.dot(
                           dipole_tensor(sys.positions[m], sys.positions[k]) *
                           sys.resonances[k].mu);
      h(m, k) = v;
      h(k, m) = v;
    }
  }
  return h;
}

Eigen::VectorXd default_freq_grid(const LocalFieldSystem& sys, int n_omega,
                                  double pad_gammas) {
  if (n_omega < 2) throw config_error("frequency grid needs n_omega >= 2");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      physical_hamiltonian(sys));
  double gamma = 0.0;
  for (const auto& r : sys.resonances) gamma = std::max(gamma, r.gamma_m);
  const double lo = solver.eigenvalues().minCoeff() - pad_gammas * gamma;
  const double hi = solver.eigenvalues().maxCoeff() + pad_gammas * gamma;
  Eigen::VectorXd grid(n_omega);
  for (int i = 0; i < n_omega; ++i)
    grid[i] = lo + (hi - lo) * i / (n_omega - 1);
  return grid;
}

std::shared_ptr<const TipScan> make_tip_line_scan(const LocalFieldSystem& sys,
                                                  int n, double extent_nm,
                                                  double z_nm) {
  if (n < 1) throw config_error("tip scan needs at least one position");
  if (extent_nm <= 0.0) throw config_error("scan extent must be positive");
  if (z_nm < sys.tip.a_r)
    throw config_error("tip scan height below the sphere radius");
  Vec3 center = Vec3::Zero();
  for (const auto& p : sys.positions) center += p;
  center /= static_cast<double>(sys.positions.size());
  auto scan = std::make_shared<TipScan>();
  scan->z_dip = z_nm;
  scan->nx = n;
  scan->ny = 1;
  const double dx = n > 1 ? extent_nm / (n - 1) : 0.0;
  scan->positions.reserve(n);
  for (int i = 0; i < n; ++i)
    scan->positions.emplace_back(center.x() + (i - 0.5 * (n - 1)) * dx,
                                 center.y(), z_nm);
  return scan;
}

LocalFieldMap localfield_map(const LocalFieldSystem& sys, const TipScan& scan,
                             const Eigen::VectorXd& freq_grid) {
  if (freq_grid.size() < 1) throw invalid_input("empty frequency grid");
  LocalFieldMap out;
  out.omegas = freq_grid;
  out.map.resize(freq_grid.size(), scan.n_tip());
  Workspace ws(sys);
  for (int i = 0; i < scan.n_tip(); ++i) {
    ws.set_tip_position(sys, scan.positions[i], scan.dip_moment);
    for (Eigen::Index k = 0; k < freq_grid.size(); ++k) {
      ws.assemble(freq_grid[k], sys);
      out.map(k, i) = absorption_from(ws.solve(freq_grid[k]), ws.e_ext);
    }
  }
  return out;
}

namespace {

// Prominence of a local maximum: extend on each side until a strictly higher
// sample or the boundary; the base on that side is the minimum over the
// stretch; prominence = peak - max(left base, right base).
double prominence(const Eigen::VectorXd& y, int peak) {
  const int n = static_cast<int>(y.size());
  double left_base = y[peak];
  for (int j = peak - 1; j >= 0; --j) {
    if (y[j] > y[peak]) break;
    left_base = std::min(left_base, y[j]);
  }
  double right_base = y[peak];
  for (int j = peak + 1; j < n; ++j) {
    if (y[j] > y[peak]) break;
    right_base = std::min(right_base, y[j]);
  }
  return y[peak] - std::max(left_base, right_base);
}

}  // namespace

std::vector<PeakSlice> extract_peak_slices(const LocalFieldMap& map,
                                           double prominence_frac,
                                           int min_separation) {
  if (prominence_frac < 0.0)
    throw config_error("prominence fraction must be non-negative");
  if (min_separation < 1) throw config_error("min_separation must be >= 1");

  const Eigen::VectorXd total = map.map.rowwise().sum();
  const int n = static_cast<int>(total.size());
  if (n < 3 || total.maxCoeff() <= 0.0) return {};
  // Resolution is judged per peak: the dip separating a maximum from its
  // neighbors must be a fraction of that maximum's own height. An absolute
  // cut would discard dim-but-isolated peaks, and the intensity comb of an
  // aggregate spans several decades. The floor rejects float-level ripple.
  const double floor_height = 1e-8 * total.maxCoeff();

  std::vector<int> candidates;
  for (int i = 1; i + 1 < n; ++i)
    if (total[i] > total[i - 1] && total[i] >= total[i + 1] &&
        total[i] > floor_height &&
        prominence(total, i) >= prominence_frac * total[i])
      candidates.push_back(i);

  // Enforce minimum separation, higher peak wins.
  std::sort(candidates.begin(), candidates.end(),
            [&](int a, int b) { return total[a] > total[b]; });
  std::vector<int> kept;
  for (const int i : candidates) {
    bool blocked = false;
    for (const int j : kept)
      if (std::abs(i - j) < min_separation) blocked = true;
    if (!blocked) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());

  std::vector<PeakSlice> slices;
  slices.reserve(kept.size());
  for (const int i : kept) {
    PeakSlice s;
    s.grid_index = i;
    s.omega = map.omegas[i];
    s.values = map.map.row(i);
    slices.push_back(std::move(s));
  }
  return slices;
}

std::vector<PeakSlice> extract_peak_slices(const LocalFieldSystem& sys,
                                           const TipScan& scan,
                                           const Eigen::VectorXd& freq_grid,
                                           double prominence_frac,
                                           int min_separation) {
  return extract_peak_slices(localfield_map(sys, scan, freq_grid),
                             prominence_frac, min_separation);
}

}  // namespace excirec
