#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

namespace dipsim {

// Internal unit system. All module code works in dimensionless units with
//   length   : a   (mean interparticle spacing)
//   energy   : D/a^3  (dipole-dipole energy at spacing a, D = mu^2/4 pi eps0)
//   frequency: D/(hbar a^3)  (hbar = 1, so frequencies and energies share one scale)
//   mass     : m   (molecule mass)
// The classical lattice problem (equilibria, mode shapes) has a second natural
// frequency scale sqrt(D/(m a^5)); the two are related by the quantum parameter
// r_d = D m/(hbar^2 a):  omega[D/hbar a^3] = omega[sqrt(D/m a^5)] / sqrt(r_d).
// Conversion to physical units happens only at the I/O boundary (units.hpp).

enum class Boundary { periodic, open, harmonic };

Boundary boundary_from_string(const std::string& s);
std::string to_string(Boundary b);

using KeyValues = std::map<std::string, std::string>;

// Plain-text config: one `key = value` per line, '#' starts a comment.
KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::string& path);

struct ModelParams {
  double r_d = 30.0;       // interaction/kinetic energy ratio, > 0
  double epsilon = 0.1;    // dipole ratio delta_mu/mu_0, in [0, 0.5)
  double b_over_a = 0.8;   // marker layer separation
  std::optional<double> omega_perp;  // transverse trap [D/(hbar a^3)]
  std::optional<double> omega_long;  // longitudinal trap [D/(hbar a^3)] (two-molecule case)
  int n_molecules = 50;
  Boundary boundary = Boundary::periodic;
  double delta_u_bar = 0.1;  // max relative displacement fraction, in (0,1)

  // default transverse trap omega_perp = 50 (D/hbar a^3) / sqrt(r_d), i.e. a
  // mechanical stiffness independent of r_d
  double omega_perp_or_default() const {
    return omega_perp ? *omega_perp : 50.0 / std::sqrt(r_d);
  }

  double mech_from_energy_freq(double w) const { return w * std::sqrt(r_d); }
  double energy_from_mech_freq(double w) const { return w / std::sqrt(r_d); }

  // sqrt(hbar / 2 m omega) in units of a, omega in D/(hbar a^3)
  double zero_point_length(double omega_energy) const {
    return 1.0 / std::sqrt(2.0 * r_d * omega_energy);
  }

  // Throws std::invalid_argument on violated invariants. Crystal scenarios
  // additionally require r_d > 1 (require_crystalline).
  void validate() const;
  void require_crystalline() const;

  static ModelParams from_config(const KeyValues& kv);
  KeyValues to_config() const;
};

}  // namespace dipsim
