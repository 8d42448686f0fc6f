#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace dipsim {

// Microwave Lambda drive |g>,|e> -> |r> with Rabi magnitudes Omega_g/e,
// phases phi_g/e and common detuning Delta. Derived controls:
//   tan(nu) = Omega_g/Omega_e,  2 eta = phi_g - phi_e,
//   Omega_eff = sqrt(Omega_g^2 + Omega_e^2).
struct LambdaDrive {
  double omega_g = 0;
  double omega_e = 0;
  double phi_g = 0;
  double phi_e = 0;
  double detuning = 0;

  double omega_eff() const;
  double nu() const;
  double eta() const;
  void validate() const;  // requires Omega_eff > 0
};

struct MixingAngles {
  double xi_alpha = 0;
  double xi_gamma = 0;
};

// Bright/dark-state mixing angles:
//   2 tan(xi_alpha) = -(Delta/Omega_eff) + sqrt(4 + (Delta/Omega_eff)^2)
//   2 tan(xi_gamma) = +(Delta/Omega_eff) + sqrt(4 + (Delta/Omega_eff)^2)
// Total on finite inputs; the dark state carries no angle.
MixingAngles mixing_angles(double delta_over_omega_eff);

// Pauli axis w(nu, eta) = (sin 2nu cos 2eta, sin 2nu sin 2eta, cos 2nu).
Eigen::Vector3d pauli_axis(double nu, double eta);

// Control map that flips w -> -w: (nu, eta) -> (pi/2 - nu, eta + pi/2).
std::pair<double, double> flip_control(double nu, double eta);

// Dressed dipole operator, canonical form mu0_prime * 1 + sigma_w_coeff * sigma_w
// with mu0_prime = mu0 + mu1 and sigma_w_coeff = -mu1,
// mu1 = (1/2) sin^2(xi_alpha) (mu_rr - mu0).
struct DressedDipole {
  double xi_alpha = 0;
  double xi_gamma = 0;
  double mu0_prime = 0;     // identity part [Debye]
  double mu1 = 0;           // state-dependent moment [Debye]
  double sigma_w_coeff = 0; // signed coefficient of sigma_w [Debye]
  Eigen::Vector3d w = Eigen::Vector3d::UnitZ();
};

DressedDipole dressed_dipole(double mu0, double mu_rr, const LambdaDrive& drive);

struct RampCheck {
  bool pass = false;
  double margin = 0;  // tau * Delta^2 / Omega_eff
};

// Adiabatic switching contract tau >> Omega_eff / Delta^2.
RampCheck adiabatic_ramp_check(double omega_eff, double delta, double tau_ramp,
                               double safety_factor = 10.0);

struct ModulationSpec {
  double omega_eff = 0;  // underlying drive strength (for the adiabatic check)
  double delta = 0;
  double nu = 0;         // base control pair realizing +w
  double eta = 0;
  double safety_factor = 10.0;
  int n_samples = 1024;
};

struct ModulationSample {
  double t = 0;
  double mu1_signed = 0;     // effective delta_mu cos(omega0 t)
  double mu1_magnitude = 0;  // physical (non-negative) dressed moment
  double nu = 0;
  double eta = 0;
  double bias_correction = 0;  // identity-part offset to absorb, -mu1(t)
  bool flipped = false;
};

struct ModulationSchedule {
  std::vector<ModulationSample> samples;
  double first_harmonic = 0;  // Fourier amplitude at omega0, used downstream
};

// Oscillating dipole delta_mu(t) = mu1_peak cos(omega0 t): the magnitude is the
// |cos| arch per half cycle and the sign is carried by flipping (nu, eta) at the
// zero crossings; a time-dependent bias-field correction keeps the identity
// part constant. Fails if a quarter period violates the adiabatic margin.
ModulationSchedule modulation_schedule(double mu1_peak, double omega0,
                                       double horizon, const ModulationSpec& spec);

// Suppression-ratio table for the two-photon Lambda realization. Keys follow
// the level roles: x/y intermediate admixtures, s the doubly-forbidden level,
// z the spin-allowed far-detuned levels.
struct LeakageBudget {
  double x = 0;               // max(Omega_1, Omega_2)/delta
  double y = 0;               // Omega_1/delta
  double s = 0;               // Omega_1 Omega_2/delta^2
  double z = 0;               // Omega_e/gamma_sr
  double effective_rabi = 0;  // Omega_1 Omega_2/delta
  double flip_flop = 0;       // tan^2(xi_alpha) |mu_er|^2, 0 when mu_er = 0
  bool flag_delta_below_gamma = false;  // delta <= gamma_sr
  bool flag_rabi_below_delta = false;   // 10 * max(Omega_1,2) <= delta
  bool flag_gamma_scale = false;        // gamma_sr/B within 3x of 0.01
};

LeakageBudget leakage_budget(double omega1, double omega2, double omega_e,
                             double delta_2photon, double gamma_sr, double b_rot,
                             double mu_er = 0.0, double xi_alpha = 0.0);

// Fixed-key JSON {x, y, s, z, effective_rabi, flags}.
std::string leakage_to_json(const LeakageBudget& lb);

}  // namespace dipsim
