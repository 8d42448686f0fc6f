#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

#include "dipsim/params.hpp"

namespace dipsim {

enum class Layer { crystal, marker };

struct CollapseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Molecule configuration in units of a. Dipoles are aligned along z; the
// marker molecule (at most one) lives at height b/a with its z coordinate
// frozen (hard bilayer constraint).
struct Geometry {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Layer> layers;
  std::vector<std::array<bool, 3>> frozen;
  std::vector<double> trap_z_center;  // transverse trap center per molecule
  Boundary boundary = Boundary::open;
  double box_length = 0.0;  // periodic only
  int image_cutoff = 30;    // periodic image sum, images per side
  int marker_site = -1;     // crystal index the marker sits above (-1: none)

  int n() const { return static_cast<int>(positions.size()); }
  int marker_index() const;  // -1 when no marker
  void validate() const;
  void fold();  // periodic: fold x into [0, L)
  // Pair separation r_i - r_j, minimum-imaged along x for periodic systems.
  Eigen::Vector3d pair_delta(int i, int j) const;
};

// Trap curvatures in mechanical units m*omega^2 [D/a^5] (omega in sqrt(D/m a^5)).
struct TrapSpec {
  double k_perp = 0.0;  // y and z confinement
  double k_long = 0.0;  // x confinement (harmonic boundary)

  // omega_perp/omega_long in D/(hbar a^3) convert via k = r_d * omega^2.
  static TrapSpec from_params(const ModelParams& p);
};

// Dipole-dipole kernel v_dd(r) = D (1 - 3 n_z^2)/r^3 and its derivatives,
// dimensionless (D = 1). Throws on r = 0.
double vdd(const Eigen::Vector3d& r);
Eigen::Vector3d vdd_grad(const Eigen::Vector3d& r);     // [D/a^4]
Eigen::Matrix3d vdd_hessian(const Eigen::Vector3d& r);  // [D/a^5]

// Pair interaction for a (minimum-imaged) separation delta, summed over
// periodic images with an analytic 1/x^3 tail beyond the cutoff.
double pair_vdd(const Geometry& g, const Eigen::Vector3d& delta);
Eigen::Vector3d pair_vdd_grad(const Geometry& g, const Eigen::Vector3d& delta);
Eigen::Matrix3d pair_vdd_hessian(const Geometry& g, const Eigen::Vector3d& delta);

// Total potential energy [D/a^3]: dipole-dipole (with periodic self-image
// constant) plus transverse/longitudinal traps.
double total_energy(const Geometry& g, const TrapSpec& trap);
// Gradient [D/a^4], length 3N; frozen coordinates carry 0.
Eigen::VectorXd total_gradient(const Geometry& g, const TrapSpec& trap);
// Full second-derivative matrix [D/a^5], 3N x 3N over all coordinates.
Eigen::MatrixXd potential_hessian(const Geometry& g, const TrapSpec& trap);

struct MinimizeOptions {
  double tol = 1e-10;  // gradient infinity norm [D/a^4]
  int max_iter = 100000;
  double collapse_distance = 0.1;
  // Per-iteration displacement cap [a]. The bilayer crystal is metastable
  // (the marker-target pair attracts head-to-tail), so steps must stay
  // inside the local basin.
  double max_step = 0.05;
  bool stability_check = true;
};

struct EquilibriumResult {
  Geometry geometry;
  double energy = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

// Deterministic quasi-Newton descent (L-BFGS with analytic gradients, Newton
// polish with the analytic Hessian). For periodic untrapped chains the free
// x translation is gauge-fixed at one site during the iteration. Throws
// CollapseError / ConvergenceError / StabilityError.
EquilibriumResult minimize_equilibrium(Geometry initial, const TrapSpec& trap,
                                       const MinimizeOptions& opt = {});

// Scenario builders. Chains have unit spacing; harmonic/open chains are
// centered on the trap.
Geometry two_molecule_geometry(double initial_spacing = 1.0);
Geometry chain_geometry(int n, Boundary boundary);
Geometry lattice_with_marker(int n, double b_over_a, int marker_site,
                             Boundary boundary);

// CSV export: index, layer, x, y, z (units of a).
std::string geometry_csv(const Geometry& g);

}  // namespace dipsim
