#include <cmath>
#include <complex>

#include "doctest.h"
#include "excirec/exciton.hpp"
#include "excirec/localfield.hpp"

using namespace excirec;
using cplx = std::complex<double>;

namespace {

AggregateGeometry chain(int n) {
  GeometryConfig cfg;
  cfg.kind = GeometryKind::chain1d;
  cfg.n = n;
  return build_geometry(cfg);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

}  // namespace

TEST_CASE("dipole coupling constant matches the hand calculation") {
  // Debye^2/(4 pi eps0 nm^3): Debye = 1e-21/c C m, 4 pi eps0 with
  // eps0 = 8.8541878128e-12 F/m, then J -> 1/cm through hc.
  const double c = 299792458.0;
  const double debye = 1e-21 / c;
  const double four_pi_eps0 = 4.0 * M_PI * 8.8541878128e-12;
  const double joule = debye * debye / (four_pi_eps0 * 1e-27);
  const double hc = 6.62607015e-34 * c * 100.0;
  CHECK(kDipoleCouplingCm == doctest::Approx(joule / hc).epsilon(1e-12));
  CHECK(kDipoleCouplingCm == doctest::Approx(5.0341166).epsilon(1e-7));
}

TEST_CASE("drude_epsilon reduces to eps_b without finite-size damping") {
  TipModel tip;
  tip.v_F = 0.0;
  for (const double w : {5e3, 2e4, 5e4})
    CHECK(std::abs(drude_epsilon(w, tip) - cplx(tip.eps_b, 0.0)) < 1e-12);
}

TEST_CASE("drude_epsilon at the table parameters, frozen by direct evaluation") {
  // nu_F/a_r = 1.39e8 / 2.5e-7 s^-1 = 2951.7136 1/cm; both Drude terms then
  // evaluate to the value below. Note Im(eps) < 0 with this sign convention;
  // the sphere formula's overall minus still gives an absorbing tip.
  const TipModel tip;
  const cplx eps = drude_epsilon(2.0e4, tip);
  CHECK(eps.real() == doctest::Approx(9.35469451340446).epsilon(1e-12));
  CHECK(eps.imag() == doctest::Approx(-1.8845024652926612).epsilon(1e-12));
  CHECK(eps.imag() < 0.0);

  const Eigen::Matrix3cd alpha = tip_polarizability(2.0e4, tip);
  CHECK(alpha(0, 0).imag() > 0.0);
  const double a3 = tip.a_r * tip.a_r * tip.a_r;
  CHECK(alpha(0, 0).real() ==
        doctest::Approx(-0.742874613771389 * a3).epsilon(1e-12));
  CHECK(alpha(0, 0).imag() ==
        doctest::Approx(0.042674280991454205 * a3).epsilon(1e-12));
}

TEST_CASE("drude_epsilon is finite and continuous over the band") {
  const TipModel tip;
  cplx prev = drude_epsilon(1.5e4, tip);
  for (int i = 1; i <= 1000; ++i) {
    const double w = 1.5e4 + i * 10.0;
    const cplx e = drude_epsilon(w, tip);
    CHECK(std::isfinite(e.real()));
    CHECK(std::isfinite(e.imag()));
    CHECK(std::abs(e - prev) < 0.05);
    prev = e;
  }
  CHECK_THROWS_AS(drude_epsilon(0.0, tip), invalid_input);
  CHECK_THROWS_AS(drude_epsilon(-1.0, tip), invalid_input);
}

TEST_CASE("tip_polarizability limits and the plasmon-pole guard") {
  // Index-matched sphere.
  const Eigen::Matrix3cd zero = tip_polarizability(2e4, null_tip());
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  // Real eps = 4 -> Clausius-Mossotti with the overall minus.
  TipModel real_tip;
  real_tip.eps_b = 4.0;
  real_tip.omega_p = 0.0;
  const Eigen::Matrix3cd cm = tip_polarizability(2e4, real_tip);
  const double a3 = real_tip.a_r * real_tip.a_r * real_tip.a_r;
  CHECK(cm(0, 0).real() == doctest::Approx(-a3 * 3.0 / 6.0));
  CHECK(cm(0, 0).imag() == 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(cm(i, j)) == 0.0);

  TipModel pole;
  pole.eps_b = -2.0;  // eps + 2 eps_env = 0
  pole.omega_p = 0.0;
  CHECK_THROWS_AS(tip_polarizability(2e4, pole), singularity_error);
}

TEST_CASE("molecular_polarizability is a rank-1 resonance tensor") {
  MolecularResonance res;
  res.omega_m = 2e4;
  res.gamma_m = 2.0;
  res.mu = Vec3(7.4, 0.0, 0.0);

  // On resonance: alpha = +i k mu mu^T / gamma.
  const Eigen::Matrix3cd on = molecular_polarizability(res.omega_m, res);
  CHECK(on(0, 0).real() == doctest::Approx(0.0));
  CHECK(on(0, 0).imag() ==
        doctest::Approx(kDipoleCouplingCm * 7.4 * 7.4 / res.gamma_m));

  // Rank 1: annihilates anything orthogonal to mu.
  const Eigen::Vector3cd perp(0.0, 1.0, 2.0);
  CHECK((on * perp).norm() == 0.0);

  // 1/|omega - omega_m| decay far from resonance.
  const double near = std::abs(molecular_polarizability(res.omega_m + 100, res)(0, 0));
  const double far = std::abs(molecular_polarizability(res.omega_m + 1000, res)(0, 0));
  CHECK(near / far == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("dipole_tensor canonical values, symmetry, zero trace") {
  const Eigen::Matrix3d t = dipole_tensor(Vec3(1, 0, 0), Vec3(0, 0, 0));
  CHECK(t(0, 0) == doctest::Approx(-2.0));
  CHECK(t(1, 1) == doctest::Approx(1.0));
  CHECK(t(2, 2) == doctest::Approx(1.0));
  CHECK(t.trace() == 0.0);

  const Vec3 a(0.3, -1.2, 0.7), b(2.0, 0.5, -0.4);
  CHECK((dipole_tensor(a, b) - dipole_tensor(b, a)).norm() == 0.0);
  CHECK(std::abs(dipole_tensor(a, b).trace()) < 1e-15);

  CHECK_THROWS_AS(dipole_tensor(a, a), singularity_error);
}

TEST_CASE("decoupled limits of the induced-dipole solve") {
  // Single molecule, zero tip polarizability: P_1 = alpha_1 E_1 exactly.
  LocalFieldParams params;
  params.tip = null_tip();
  const auto sys = make_local_field_system(chain(1), params);
  const Vec3 r_dip(0.5, 0.0, 3.75);
  const double w = 2.0e4 + 0.5;

  const auto p = solve_induced_dipoles(w, sys, r_dip);
  REQUIRE(p.size() == 2);
  CHECK(p[0].norm() == 0.0);
  const Eigen::Vector3cd expect =
      molecular_polarizability(w, sys.resonances[0]) *
      hertz_field(sys.positions[0], r_dip, Vec3(0, 0, 1))
          .cast<cplx>();
  CHECK((p[1] - expect).norm() < 1e-14 * expect.norm());

  // Far-separated pair: couplings ~ (a/R)^3 below 1e-9 of the self term.
  GeometryConfig cfg;
  cfg.kind = GeometryKind::chain1d;
  cfg.n = 2;
  cfg.spacing = 4000.0;
  const auto far_sys = make_local_field_system(build_geometry(cfg), params);
  const auto pf = solve_induced_dipoles(w, far_sys, r_dip);
  const Eigen::Vector3cd e0 =
      molecular_polarizability(w, far_sys.resonances[0]) *
      hertz_field(far_sys.positions[0], r_dip, Vec3(0, 0, 1)).cast<cplx>();
  CHECK((pf[1] - e0).norm() < 1e-8 * e0.norm());
}

TEST_CASE("two-molecule solution matches a 6x6 direct-inversion oracle") {
  LocalFieldParams params;
  params.tip = null_tip();
  params.gamma_m = 3.0;
  const auto sys = make_local_field_system(chain(2), params);
  const Vec3 r_dip(0.4, 0.1, 3.75);
  const Vec3 d(0, 0, 1);

  for (const double w : {1.95e4, 2.0e4, 2.028e4}) {
    // Independent assembly: P = (I + alpha T)^{-1} alpha E, blocks by hand.
    const Eigen::Matrix3cd a1 = molecular_polarizability(w, sys.resonances[0]);
    const Eigen::Matrix3cd a2 = molecular_polarizability(w, sys.resonances[1]);
    const Eigen::Matrix3d t12 =
        dipole_tensor(sys.positions[0], sys.positions[1]);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(6, 6);
    m.block<3, 3>(0, 3) = a1 * t12;
    m.block<3, 3>(3, 0) = a2 * t12;
    Eigen::VectorXcd rhs(6);
    rhs.segment<3>(0) =
        a1 * hertz_field(sys.positions[0], r_dip, d).cast<cplx>();
    rhs.segment<3>(3) =
        a2 * hertz_field(sys.positions[1], r_dip, d).cast<cplx>();
    const Eigen::VectorXcd oracle = m.inverse() * rhs;

    const auto p = solve_induced_dipoles(w, sys, r_dip, d);
    CHECK((p[1] - oracle.segment<3>(0)).norm() < 1e-12 * oracle.norm());
    CHECK((p[2] - oracle.segment<3>(3)).norm() < 1e-12 * oracle.norm());
  }
}

TEST_CASE("molecule plus real tip matches a 6x6 oracle with particle 0") {
  LocalFieldParams params;  // default silver-like tip
  const auto sys = make_local_field_system(chain(1), params);
  const Vec3 r_dip(0.3, 0.0, 3.75);
  const Vec3 d(0, 0, 1);
  const double w = 2.0e4 - 40.0;

  const Eigen::Matrix3cd at = tip_polarizability(w, sys.tip);
  const Eigen::Matrix3cd am = molecular_polarizability(w, sys.resonances[0]);
  const Eigen::Matrix3d t01 = dipole_tensor(r_dip, sys.positions[0]);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(6, 6);
  m.block<3, 3>(0, 3) = at * t01;
  m.block<3, 3>(3, 0) = am * t01;
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(6);
  rhs.segment<3>(3) =
      am * hertz_field(sys.positions[0], r_dip, d).cast<cplx>();
  const Eigen::VectorXcd oracle = m.inverse() * rhs;

  const auto p = solve_induced_dipoles(w, sys, r_dip, d);
  CHECK((p[0] - oracle.segment<3>(0)).norm() < 1e-12 * oracle.norm());
  CHECK((p[1] - oracle.segment<3>(3)).norm() < 1e-12 * oracle.norm());
  CHECK(p[0].norm() > 0.0);  // tip actually responds

  CHECK_THROWS_AS(solve_induced_dipoles(w, sys, Vec3(0, 0, 1.0)),
                  invalid_input);
}

TEST_CASE("single-molecule absorption is a positive Lorentzian of unit area") {
  LocalFieldParams params;
  params.tip = null_tip();
  params.gamma_m = 2.0;
  const auto sys = make_local_field_system(chain(1), params);
  const Vec3 r_dip(0.8, 0.0, 3.75);

  const double on_res = absorption_at(2.0e4, sys, r_dip);
  CHECK(on_res > 0.0);

  // A(w) = k mu^2 f^2 gamma / ((w-w_m)^2 + gamma^2); integral = pi k mu^2 f^2
  // independent of gamma.
  const double f = 7.4 * Vec3(1, 0, 0).dot(
                             hertz_field(sys.positions[0], r_dip, Vec3(0, 0, 1)));
  const double analytic = M_PI * kDipoleCouplingCm * f * f;
  for (const double gamma : {1.0, 5.0}) {
    LocalFieldParams pg = params;
    pg.gamma_m = gamma;
    const auto sg = make_local_field_system(chain(1), pg);
    const double half_width = 60.0 * gamma;
    const int steps = 8001;
    double integral = 0.0;
    for (int i = 0; i < steps; ++i) {
      const double w = 2.0e4 - half_width +
                       2.0 * half_width * i / (steps - 1);
      const double weight = (i == 0 || i == steps - 1) ? 0.5 : 1.0;
      integral += weight * absorption_at(w, sg, r_dip);
    }
    integral *= 2.0 * half_width / (steps - 1);
    CHECK(integral == doctest::Approx(analytic).epsilon(0.02));
  }

  // Linear response: doubling the drive quadruples the absorption.
  const double a1 = absorption_at(2.0e4, sys, r_dip, Vec3(0, 0, 1));
  const double a2 = absorption_at(2.0e4, sys, r_dip, Vec3(0, 0, 2));
  CHECK(a2 == doctest::Approx(4.0 * a1).epsilon(1e-12));
}

TEST_CASE("physical_hamiltonian carries the frozen coupling scale") {
  const auto sys = make_local_field_system(chain(3), LocalFieldParams{});
  const Eigen::MatrixXd h = physical_hamiltonian(sys);
  // Head-to-tail nearest neighbors: -2 mu^2 k_c / a^3.
  const double scale = 7.4 * 7.4 * kDipoleCouplingCm / (1.25 * 1.25 * 1.25);
  CHECK(h(0, 0) == doctest::Approx(2.0e4));
  CHECK(h(0, 1) == doctest::Approx(-2.0 * scale).epsilon(1e-12));
  CHECK(h(0, 1) == doctest::Approx(-282.28426075).epsilon(1e-9));
  CHECK(h(0, 2) == doctest::Approx(-2.0 * scale / 8.0).epsilon(1e-12));
  CHECK((h - h.transpose()).norm() == 0.0);
}

TEST_CASE("default_freq_grid brackets the exciton band by 50 gammas") {
  LocalFieldParams params;
  params.gamma_m = 2.0;
  const auto sys = make_local_field_system(chain(5), params);
  const auto grid = default_freq_grid(sys, 100);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(physical_hamiltonian(sys));
  CHECK(grid.size() == 100);
  CHECK(grid[0] == doctest::Approx(es.eigenvalues().minCoeff() - 100.0));
  CHECK(grid[99] == doctest::Approx(es.eigenvalues().maxCoeff() + 100.0));
  CHECK(grid[1] > grid[0]);
}

TEST_CASE("peak extraction finds synthetic Lorentzians and honors rules") {
  // Three isolated Lorentzian ridges spanning a large height range: the
  // prominence rule is relative to each peak, so the dim one still counts.
  const int n_w = 400, n_tip = 8;
  LocalFieldMap map;
  map.omegas.resize(n_w);
  map.map.setZero(n_w, n_tip);
  const double centers[3] = {100.0, 200.0, 300.0};
  const double heights[3] = {1.0, 0.02, 0.6};
  for (int i = 0; i < n_w; ++i) {
    const double w = i;  // unit grid
    map.omegas[i] = w;
    double y = 0.0;
    for (int k = 0; k < 3; ++k)
      y += heights[k] / ((w - centers[k]) * (w - centers[k]) / 25.0 + 1.0);
    for (int j = 0; j < n_tip; ++j) map.map(i, j) = y / n_tip;
  }

  const auto slices = extract_peak_slices(map, 0.05, 2);
  REQUIRE(slices.size() == 3);
  CHECK(slices[0].omega == doctest::Approx(100.0).epsilon(0.01));
  CHECK(slices[1].omega == doctest::Approx(200.0).epsilon(0.01));
  CHECK(slices[2].omega == doctest::Approx(300.0).epsilon(0.01));
  CHECK(slices[0].values.size() == n_tip);

  // A barely separated twin: the lower maximum's dip is shallow relative
  // to its height, so it is a shoulder at 5% but a peak at 1%.
  LocalFieldMap twin;
  twin.omegas = Eigen::VectorXd::LinSpaced(n_w, 0, n_w - 1);
  twin.map.setZero(n_w, 1);
  for (int i = 0; i < n_w; ++i) {
    const double w = i;
    twin.map(i, 0) = 1.0 / ((w - 200.0) * (w - 200.0) / 25.0 + 1.0) +
                     0.9 / ((w - 208.0) * (w - 208.0) / 25.0 + 1.0);
  }
  CHECK(extract_peak_slices(twin, 0.05, 2).size() == 1);
  CHECK(extract_peak_slices(twin, 0.01, 2).size() == 2);

  // Two maxima closer than the separation: the higher one wins.
  LocalFieldMap close;
  close.omegas = Eigen::VectorXd::LinSpaced(21, 0, 20);
  close.map.setZero(21, 1);
  close.map(9, 0) = 1.0;
  close.map(11, 0) = 0.8;
  const auto kept = extract_peak_slices(close, 0.05, 4);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].grid_index == 9);

  // All-zero map: no peaks, no error.
  LocalFieldMap flat;
  flat.omegas = Eigen::VectorXd::LinSpaced(10, 0, 9);
  flat.map.setZero(10, 4);
  CHECK(extract_peak_slices(flat).empty());
}

TEST_CASE("single molecule yields exactly one peak at its resonance") {
  LocalFieldParams params;
  params.tip = null_tip();
  const auto sys = make_local_field_system(chain(1), params);
  const auto scan = make_tip_line_scan(sys, 33, 20.0, 3.75);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(801, 2.0e4 - 40, 2.0e4 + 40);
  const auto slices = extract_peak_slices(sys, *scan, grid);
  REQUIRE(slices.size() == 1);
  CHECK(std::abs(slices[0].omega - 2.0e4) <= 0.2);
}

TEST_CASE("reduction limit: zero tip recovers the ideal spectra") {
  // With alpha_tip = 0 the coupled-dipole poles sit at the eigenvalues of
  // the physical Hamiltonian and the spatial residues are the ideal spectra.
  const int n = 5;
  const auto g = chain(n);
  LocalFieldParams params;
  params.tip = null_tip();
  params.gamma_m = 1.0;
  const auto sys = make_local_field_system(g, params);

  const auto scan = make_tip_line_scan(sys, 64, 40.0 * 1.25, 3.0 * 1.25);
  const auto map = localfield_map(sys, *scan, default_freq_grid(sys, 1500));
  // The five resonances are far apart compared to gamma_m, so each maximum
  // is fully prominent regardless of how little weight the state carries.
  const auto slices = extract_peak_slices(map, 0.05, 2);
  REQUIRE(slices.size() == n);

  // Independent eigenenergies: natural-unit chain scaled into 1/cm.
  const auto es = diagonalize(build_hamiltonian(g));
  const double scale = 7.4 * 7.4 * kDipoleCouplingCm / (1.25 * 1.25 * 1.25);
  const auto ideal_scan = make_line_scan(g, 64, 40.0, 3.0);
  for (int l = 0; l < n; ++l) {
    const double expect = 2.0e4 + scale * es.energies[l];
    CHECK(std::abs(slices[l].omega - expect) <= 2.0 * params.gamma_m);
    const auto ideal = scan_spectrum(es.coefficients.row(l), g, ideal_scan);
    CHECK(pearson(slices[l].values, ideal.values) > 0.99);
  }
}
