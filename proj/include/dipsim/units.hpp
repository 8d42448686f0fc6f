#pragma once

#include <string>

#include "dipsim/params.hpp"

namespace dipsim {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double amu = 1.66053906660e-27;       // kg
inline constexpr double debye = 3.33564095198e-30;     // C m
inline constexpr double four_pi_eps0 = 1.11265005545e-10;  // C^2 / (N m^2)
}  // namespace constants

// Physical parameters of a concrete molecule. dipole_debye is the *induced*
// moment entering D = mu^2/(4 pi eps0); the spectroscopic constants are only
// used for leakage-budget scale checks.
struct PhysicalBinding {
  std::string name;
  double dipole_debye = 0;
  double mass_amu = 0;
  double rotational_constant_ghz = 0;
  double spin_rotation_mhz = 0;
  double wavelength_nm = 0;

  double interaction_d() const;  // D = mu^2/(4 pi eps0) [J m^3]
  double mass_kg() const;

  void validate() const;

  static PhysicalBinding lics();
  static PhysicalBinding sro();
  // Built-in table lookup ("LiCs", "SrO"); throws on unknown names.
  static PhysicalBinding by_name(const std::string& name);
};

enum class Quantity { length, energy, frequency, time, force };

Quantity quantity_from_tag(const std::string& tag);  // throws on unknown tags
std::string to_string(Quantity q);

// Lattice spacing a = D m / (hbar^2 r_d) [m].
double lattice_spacing_m(const ModelParams& params, const PhysicalBinding& binding);

// SI value of `value` carrying the given dimensionless unit tag. Frequencies
// are angular (rad/s); energies in Joule.
double to_physical(const ModelParams& params, const PhysicalBinding& binding,
                   double value, Quantity q);
double to_dimensionless(const ModelParams& params, const PhysicalBinding& binding,
                        double si_value, Quantity q);

// Admissible tweezer trap frequencies [rad/s] for a tweezer of width sigma_tw
// (in units of a): the lower edge keeps the marker wave function below one
// lattice spacing, sqrt(hbar/2 m omega) <= a; the upper edge keeps the maximal
// tweezer force a safety factor below the lattice restoring force,
// 3 sqrt(e) D / a^4 >= safety * m omega^2 sigma.
struct TweezerWindow {
  double omega_min = 0;  // rad/s
  double omega_max = 0;  // rad/s (inf if sigma -> 0)
  bool feasible = false;
};

TweezerWindow tweezer_constraints(const ModelParams& params, double sigma_tw_a,
                                  const PhysicalBinding& binding,
                                  double safety_factor = 10.0);

}  // namespace dipsim
