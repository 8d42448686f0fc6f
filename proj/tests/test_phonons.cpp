#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dipsim/phonons.hpp"
#include "doctest.h"

using namespace dipsim;

namespace {

ModelParams chain_params(int n, double b = 0.8) {
  ModelParams p;
  p.r_d = 30.0;
  p.n_molecules = n;
  p.b_over_a = b;
  p.boundary = Boundary::periodic;
  return p;
}

ModelParams two_molecule_params(double nu_mech, double nu_perp_factor = 5.0) {
  ModelParams p;
  p.r_d = 30.0;
  p.n_molecules = 2;
  p.boundary = Boundary::harmonic;
  p.omega_long = p.energy_from_mech_freq(nu_mech);
  p.omega_perp = p.energy_from_mech_freq(nu_perp_factor * nu_mech);
  return p;
}

struct Solved {
  EquilibriumResult eq;
  PhononSpectrum spec;
  LocalModeSummary locals;
};

Solved solve_marker_chain(int n, double b) {
  const ModelParams p = chain_params(n, b);
  const TrapSpec trap = TrapSpec::from_params(p);
  Solved s;
  s.eq = minimize_equilibrium(lattice_with_marker(n, b, n / 2, p.boundary), trap);
  s.spec = normal_modes(build_dynamical_matrix(s.eq, trap), p.r_d);
  s.locals = classify_modes(s.spec, s.eq.geometry);
  return s;
}

// finite difference of the analytic gradient
Eigen::MatrixXd fd_hessian(const Geometry& g, const TrapSpec& trap, double h) {
  const int dim = 3 * g.n();
  Eigen::MatrixXd out(dim, dim);
  for (int c = 0; c < dim; ++c) {
    Geometry gp = g, gm = g;
    gp.positions[c / 3](c % 3) += h;
    gm.positions[c / 3](c % 3) -= h;
    out.col(c) = (total_gradient(gp, trap) - total_gradient(gm, trap)) / (2.0 * h);
  }
  return 0.5 * (out + out.transpose().eval());
}

}  // namespace

TEST_CASE("two-molecule trap: mode frequencies and eigenvectors") {
  const double nu_mech = std::sqrt(6.0);
  const ModelParams p = two_molecule_params(nu_mech);
  const TrapSpec trap = TrapSpec::from_params(p);
  const EquilibriumResult eq = minimize_equilibrium(two_molecule_geometry(), trap);
  PhononSpectrum spec = normal_modes(build_dynamical_matrix(eq, trap), p.r_d);
  classify_modes(spec, eq.geometry);
  REQUIRE(spec.n_modes() == 6);

  const double nu = *p.omega_long, nu_perp = *p.omega_perp;
  // x: COM at nu, breathing at sqrt(5) nu
  CHECK(spec.omega[0] == doctest::Approx(nu).epsilon(1e-8));
  CHECK(spec.omega[1] == doctest::Approx(std::sqrt(5.0) * nu).epsilon(1e-8));
  // transverse breathing from the independent Hessian curvatures
  const double wy = std::sqrt(nu_perp * nu_perp - nu * nu);
  const double wz = std::sqrt(nu_perp * nu_perp - 3.0 * nu * nu);
  std::vector<double> rest(spec.omega.begin() + 2, spec.omega.end());
  std::sort(rest.begin(), rest.end());
  CHECK(rest[0] == doctest::Approx(wz).epsilon(1e-8));
  CHECK(rest[1] == doctest::Approx(wy).epsilon(1e-8));
  CHECK(rest[2] == doctest::Approx(nu_perp).epsilon(1e-8));
  CHECK(rest[3] == doctest::Approx(nu_perp).epsilon(1e-8));

  // eigenvectors (1,1)/sqrt(2) and (1,-1)/sqrt(2)
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(spec.modes(0, 0)) == doctest::Approx(inv_sqrt2).epsilon(1e-10));
  CHECK(spec.modes(0, 0) == doctest::Approx(spec.modes(3, 0)).epsilon(1e-10));
  CHECK(spec.modes(0, 1) == doctest::Approx(-spec.modes(3, 1)).epsilon(1e-10));

  // degenerate transverse COM pair stays axis-pure
  for (int k = 0; k < 6; ++k) {
    double best = 0.0;
    for (int axis = 0; axis < 3; ++axis)
      best = std::max(best, spec.axis_weight(k, axis));
    CHECK(best > 1.0 - 1e-10);
  }
}

TEST_CASE("dynamical matrix matches finite differences on random stable geometries") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams p;
    p.r_d = 30.0;
    p.n_molecules = 5;
    p.boundary = Boundary::harmonic;
    p.omega_long = p.energy_from_mech_freq(0.5);
    p.omega_perp = p.energy_from_mech_freq(12.0);
    const TrapSpec trap = TrapSpec::from_params(p);
    Geometry g = chain_geometry(5, Boundary::harmonic);
    for (auto& r : g.positions) r += Eigen::Vector3d(u(rng), u(rng), u(rng));
    const EquilibriumResult eq = minimize_equilibrium(g, trap);

    const DynamicalMatrix dm = build_dynamical_matrix(eq, trap);
    const Eigen::MatrixXd fd = fd_hessian(eq.geometry, trap, 1e-5);
    const double scale = dm.phi.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (size_t a = 0; a < dm.coords.size(); ++a)
      for (size_t b = 0; b < dm.coords.size(); ++b)
        worst = std::max(worst, std::abs(dm.phi(a, b) -
                                         fd(dm.coords[a], dm.coords[b])));
    CHECK(worst / scale < 1e-5);
  }
}

TEST_CASE("pair block curvature of the two-molecule chain") {
  // longitudinal curvature of 1/x^3 at unit spacing: +12 on the diagonal
  Geometry g = two_molecule_geometry(1.0);
  TrapSpec trap;
  const Eigen::MatrixXd h = potential_hessian(g, trap);
  CHECK(h(0, 0) == doctest::Approx(12.0));
  CHECK(h(0, 3) == doctest::Approx(-12.0));
  // relative-coordinate curvature 2 * 12 on the reduced problem
  CHECK(h(0, 0) - h(0, 3) == doctest::Approx(24.0));
  CHECK(h(1, 1) == doctest::Approx(-3.0));
  CHECK(h(2, 2) == doctest::Approx(-9.0));
}

TEST_CASE("N=50 marker spectrum: hygiene invariants") {
  const Solved s = solve_marker_chain(50, 0.8);
  const int m = s.spec.n_modes();
  REQUIRE(m == 3 * 51 - 1);  // marker z is frozen

  // orthonormal mode functions
  const Eigen::MatrixXd gram =
      s.spec.modes.transpose() * s.spec.modes -
      Eigen::MatrixXd::Identity(m, m);
  CHECK(gram.cwiseAbs().maxCoeff() < 1e-10);

  // eigenvalue sum equals the trace of the dynamical matrix
  const ModelParams p = chain_params(50, 0.8);
  const TrapSpec trap = TrapSpec::from_params(p);
  const DynamicalMatrix dm = build_dynamical_matrix(s.eq, trap);
  double sum = 0.0;
  for (double e : s.spec.eigenvalue) sum += e;
  CHECK(sum == doctest::Approx(dm.phi.trace()).epsilon(1e-10));

  // acoustic sum rule: untrapped x rows sum to zero over the x generator
  for (size_t a = 0; a < dm.coords.size(); ++a) {
    if (dm.coords[a] % 3 != 0) continue;
    double row = 0.0;
    for (size_t b = 0; b < dm.coords.size(); ++b)
      if (dm.coords[b] % 3 == 0) row += dm.phi(a, b);
    CHECK(std::abs(row) < 1e-9 * dm.phi.cwiseAbs().maxCoeff());
  }

  // mirror symmetry: every mode even or odd about the marker site
  const Geometry& g = s.eq.geometry;
  const int n = g.n(), site = g.marker_site;
  std::vector<int> partner(n);
  for (int i = 0; i < n; ++i) {
    partner[i] = i;
    if (g.layers[i] == Layer::crystal)
      partner[i] = ((2 * site - i) % (n - 1) + (n - 1)) % (n - 1);
  }
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd reflected = Eigen::VectorXd::Zero(3 * n);
    for (int i = 0; i < n; ++i) {
      reflected(3 * partner[i] + 0) = -s.spec.modes(3 * i + 0, k);
      reflected(3 * partner[i] + 1) = s.spec.modes(3 * i + 1, k);
      reflected(3 * partner[i] + 2) = s.spec.modes(3 * i + 2, k);
    }
    const double even = (reflected - s.spec.modes.col(k)).norm();
    const double odd = (reflected + s.spec.modes.col(k)).norm();
    CHECK(std::min(even, odd) < 1e-8);
  }
}

TEST_CASE("spectrum invariant under cyclic relabeling of a periodic chain") {
  const ModelParams p = chain_params(12);
  const TrapSpec trap = TrapSpec::from_params(p);
  const EquilibriumResult eq =
      minimize_equilibrium(chain_geometry(12, Boundary::periodic), trap);
  const PhononSpectrum ref = normal_modes(build_dynamical_matrix(eq, trap), p.r_d);

  Geometry shifted = eq.geometry;
  for (int i = 0; i < 12; ++i)
    shifted.positions[i] = eq.geometry.positions[(i + 5) % 12];
  EquilibriumResult eq2 = eq;
  eq2.geometry = shifted;
  const PhononSpectrum rot = normal_modes(build_dynamical_matrix(eq2, trap), p.r_d);
  for (int k = 0; k < ref.n_modes(); ++k)
    CHECK(ref.omega[k] ==
          doctest::Approx(rot.omega[k]).epsilon(1e-10));
}

TEST_CASE("chain without marker: two optical and one acoustic branch, no local modes") {
  const ModelParams p = chain_params(50);
  const TrapSpec trap = TrapSpec::from_params(p);
  const EquilibriumResult eq =
      minimize_equilibrium(chain_geometry(50, Boundary::periodic), trap);
  PhononSpectrum spec = normal_modes(build_dynamical_matrix(eq, trap), p.r_d);
  const LocalModeSummary locals = classify_modes(spec, eq.geometry);
  CHECK(locals.count() == 0);
  int nx = 0, ny = 0, nz = 0;
  for (Branch b : spec.branch) {
    nx += b == Branch::acoustic_x;
    ny += b == Branch::optical_y;
    nz += b == Branch::optical_z;
  }
  CHECK(nx == 50);
  CHECK(ny == 50);
  CHECK(nz == 50);
}

TEST_CASE("marker creates exactly three local modes, one per axis") {
  const Solved s = solve_marker_chain(50, 0.8);
  CHECK(s.locals.count() == 3);
  for (int axis = 0; axis < 3; ++axis) {
    REQUIRE(s.locals.per_axis[axis].size() == 1);
    const int k = s.locals.per_axis[axis][0];
    CHECK(s.spec.participation(k) < 4.0);
    CHECK(marker_target_weight(s.spec, s.eq.geometry, k) > 0.5);
  }
  // x local mode above the acoustic band, z local mode below the z band
  const int kx = s.locals.unique(0), kz = s.locals.unique(2);
  double acoustic_top = 0.0, zband_bottom = 1e300;
  for (int k = 0; k < s.spec.n_modes(); ++k) {
    if (s.spec.branch[k] == Branch::acoustic_x)
      acoustic_top = std::max(acoustic_top, s.spec.omega[k]);
    if (s.spec.branch[k] == Branch::optical_z)
      zband_bottom = std::min(zband_bottom, s.spec.omega[k]);
  }
  CHECK(s.spec.omega[kx] > acoustic_top);
  CHECK(s.spec.omega[kz] < zband_bottom);
}

TEST_CASE("localization strengthens as the layers approach") {
  double prev[3] = {0.0, 0.0, 0.0};
  bool first = true;
  for (double b : {0.95, 0.9, 0.85, 0.8}) {
    const Solved s = solve_marker_chain(50, b);
    REQUIRE(s.locals.count() == 3);
    for (int axis = 0; axis < 3; ++axis) {
      const double w =
          marker_target_weight(s.spec, s.eq.geometry, s.locals.unique(axis));
      if (!first) CHECK(w > prev[axis]);
      prev[axis] = w;
    }
    first = false;
  }
}

TEST_CASE("marker perturbs the dynamical matrix only near its site") {
  const int n = 50;
  const ModelParams p = chain_params(n);
  const TrapSpec trap = TrapSpec::from_params(p);
  const EquilibriumResult plain =
      minimize_equilibrium(chain_geometry(n, Boundary::periodic), trap);
  const Solved s = solve_marker_chain(n, 0.8);

  const Eigen::MatrixXd h_plain = potential_hessian(plain.geometry, trap);
  const Eigen::MatrixXd h_marker = potential_hessian(s.eq.geometry, trap);
  auto block_norm = [&](int i) {
    return (h_marker.block<3, 3>(3 * i, 3 * i) - h_plain.block<3, 3>(3 * i, 3 * i))
        .norm();
  };
  const int site = s.eq.geometry.marker_site;
  const double near = block_norm(site);
  double far = 0.0;
  for (int d = 15; d <= 25; ++d) far = std::max(far, block_norm((site + d) % n));
  CHECK(far < 1e-2 * near);
}

TEST_CASE("imaginary frequencies are rejected") {
  // two stacked dipoles with free z attract: the pair Hessian has a negative
  // eigenvalue at any separation without a trap
  Geometry g;
  g.boundary = Boundary::open;
  g.positions = {{0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}};
  g.layers = {Layer::crystal, Layer::crystal};
  g.frozen = {{false, false, false}, {false, false, false}};
  g.trap_z_center = {0.0, 1.0};
  EquilibriumResult fake;
  fake.geometry = g;
  TrapSpec trap;
  const DynamicalMatrix dm = build_dynamical_matrix(fake, trap);
  CHECK_THROWS_AS(normal_modes(dm, 30.0), StabilityError);
}

TEST_CASE("spectrum CSV schema") {
  const Solved s = solve_marker_chain(10, 0.8);
  const std::string csv = spectrum_csv(s.spec);
  CHECK(csv.rfind("k,omega,branch,ipr\n", 0) == 0);
  CHECK(csv.find("local_z") != std::string::npos);
  const std::string dump = modefunction_csv(s.spec);
  CHECK(dump.rfind("k,molecule,axis,amplitude\n", 0) == 0);
}
