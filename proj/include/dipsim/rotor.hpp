#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dipsim {

// Rigid rotor in a DC bias field, H = B N^2 - mu_b E_b cos(theta).
// The field only couples N <-> N+1 within each M block with
//   <N+1,M|cos(theta)|N,M> = sqrt(((N+1)^2 - M^2) / ((2N+1)(2N+3))).
double cos_theta_element(int n, int abs_m);

struct StarkLevel {
  int label_n = 0;      // adiabatic (N,|M|) label, continued from E_b = 0
  int label_abs_m = 0;
  double energy = 0;         // units of B
  double induced_dipole = 0; // units of mu_b, = <cos theta> (Hellmann-Feynman)
  Eigen::VectorXd amplitudes;  // over |N, M> with N = |M| .. n_max, fixed M
};

struct StarkOptions {
  int n_max = 20;        // basis cutoff, >= 4
  int max_label_n = 3;   // report levels with label N up to this
  double tail_tol = 1e-8;   // max population allowed in the top two N shells
  double label_step = 0.05; // continuation step in x = mu_b E_b / B
};

// Spectrum at dimensionless field x = mu_b E_b / B. Levels are returned for
// every adiabatic label (N,|M|) with N <= max_label_n, sorted by (N,|M|);
// energies ascend within each M block by construction. Throws on basis
// truncation (tail population above tail_tol in a reported level).
std::vector<StarkLevel> stark_spectrum_scaled(double x, const StarkOptions& opt = {});

// Physical-parameter wrapper; output units are unchanged (energy in B,
// dipole in mu_b).
std::vector<StarkLevel> stark_spectrum(double rotational_b, double mu_b,
                                       double e_bias, const StarkOptions& opt = {});

}  // namespace dipsim
