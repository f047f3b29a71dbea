#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "excirec/common.hpp"
#include "excirec/geometry.hpp"
#include "excirec/nearfield.hpp"

namespace excirec {

// Everything in this module runs in physical units: frequencies and energies
// in 1/cm, lengths in nm, dipole moments in Debye. A dipole-dipole energy
// mu^2/(4 pi eps0 R^3) with mu in Debye and R in nm is this many 1/cm:
// Debye^2/(4 pi eps0 nm^3) = 1.0000000005e-22 J.
constexpr double kDipoleCouplingCm = 5.034116570283378;

// Angular rates in rad/s convert to wavenumbers by 1/(2 pi c), matching the
// E/(hc) convention of the tip parameters (omega_p = 7.26e4 1/cm = 9.0 eV).
constexpr double kRadPerSecToCm = 1.0 / (2.0 * M_PI * 2.99792458e10);

struct TipModel {
  double a_r = 2.5;        // sphere radius, nm
  double eps_b = 9.0;      // background dielectric constant
  double eps_env = 1.0;    // environment dielectric constant
  double omega_p = 7.26e4; // plasma frequency, 1/cm
  double gamma_p = 400.0;  // Ohmic damping, 1/cm
  double v_F = 1.39e8;     // Fermi velocity, cm/s
};

// An index-matched, non-polarizable sphere: alpha_tip is identically zero.
inline TipModel null_tip() {
  TipModel t;
  t.eps_b = t.eps_env;
  t.omega_p = 0.0;
  return t;
}

struct MolecularResonance {
  double omega_m = 2.0e4;  // transition frequency, 1/cm
  double gamma_m = 1.0;    // damping, 1/cm
  Vec3 mu = Vec3(7.4, 0.0, 0.0);  // transition dipole, Debye
};

// Particle 0 is the tip sphere; molecules are 1..N. The tip sphere center
// coincides with the Hertz excitation dipole and follows the scan.
struct LocalFieldSystem {
  std::vector<Vec3> positions;  // molecule positions, nm, in the z=0 plane
  std::vector<MolecularResonance> resonances;
  TipModel tip;
  int n_molecules() const { return static_cast<int>(positions.size()); }
};

struct LocalFieldParams {
  double spacing_nm = 1.25;  // lattice constant a
  double mu_debye = 7.4;
  double omega_m = 2.0e4;
  double gamma_m = 1.0;
  TipModel tip{};
};

LocalFieldSystem make_local_field_system(const AggregateGeometry& geometry,
                                         const LocalFieldParams& params);

std::complex<double> drude_epsilon(double omega, const TipModel& tip);

// alpha_tip = -a_r^3 (eps - eps_env)/(eps + 2 eps_env) I, in nm^3
// (the 4 pi eps0 of the defining equation cancels against dipole_tensor).
Eigen::Matrix3cd tip_polarizability(double omega, const TipModel& tip);

// alpha_m = -(mu (x) mu)/(omega - omega_m + i gamma_m), in nm^3.
Eigen::Matrix3cd molecular_polarizability(double omega,
                                          const MolecularResonance& res);

// T = (1/R^3)(I - 3 Rhat (x) Rhat), in 1/nm^3, 1/(4 pi eps0) folded.
Eigen::Matrix3d dipole_tensor(const Vec3& r_m, const Vec3& r_n);

// Solves P_m = alpha_m (E_m^ext - sum_{n != m} T_mn P_n) for m = 0..N with
// E_0^ext = 0; returns P_0..P_N. Relative residual is checked below 1e-10.
std::vector<Eigen::Vector3cd> solve_induced_dipoles(
    double omega, const LocalFieldSystem& sys, const Vec3& r_dip,
    const Vec3& d = Vec3(0.0, 0.0, 1.0));

// A(omega) = Im sum_m P_m . E_m^ext (the tip term vanishes).
double absorption_at(double omega, const LocalFieldSystem& sys,
                     const Vec3& r_dip, const Vec3& d = Vec3(0.0, 0.0, 1.0));

// N x N exciton Hamiltonian of the molecular subsystem in 1/cm: transition
// frequencies on the diagonal, mu_m . T_mn . mu_n couplings elsewhere. The
// poles of the tip-free coupled-dipole response sit at its eigenvalues.
Eigen::MatrixXd physical_hamiltonian(const LocalFieldSystem& sys);

// Uniform grid over [min eig - pad*gamma, max eig + pad*gamma].
Eigen::VectorXd default_freq_grid(const LocalFieldSystem& sys,
                                  int n_omega = 2000, double pad_gammas = 50.0);

// Line of tip positions (sphere center = Hertz dipole) spanning extent_nm
// symmetrically about the aggregate center at height z_nm.
std::shared_ptr<const TipScan> make_tip_line_scan(const LocalFieldSystem& sys,
                                                  int n, double extent_nm,
                                                  double z_nm);

struct LocalFieldMap {
  Eigen::VectorXd omegas;
  Eigen::MatrixXd map;  // n_omega x n_tip
};

LocalFieldMap localfield_map(const LocalFieldSystem& sys, const TipScan& scan,
                             const Eigen::VectorXd& freq_grid);

struct PeakSlice {
  int grid_index = 0;
  double omega = 0.0;
  Eigen::VectorXd values;  // spatial slice at the peak frequency
};

// Sums the map over tip positions per frequency, finds local maxima whose
// prominence is >= prominence_frac of their own height (dim but isolated
// peaks count as resolved; shallow shoulders do not) and at least
// min_separation grid steps apart (higher peak wins), and returns the
// spatial slices, ordered by frequency. No peaks is an empty list, not an
// error.
std::vector<PeakSlice> extract_peak_slices(const LocalFieldMap& map,
                                           double prominence_frac = 0.05,
                                           int min_separation = 2);

std::vector<PeakSlice> extract_peak_slices(const LocalFieldSystem& sys,
                                           const TipScan& scan,
                                           const Eigen::VectorXd& freq_grid,
                                           double prominence_frac = 0.05,
                                           int min_separation = 2);

}  // namespace excirec
