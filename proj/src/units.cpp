#include "dipsim/units.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dipsim {

double PhysicalBinding::interaction_d() const {
  const double mu = dipole_debye * constants::debye;
  return mu * mu / constants::four_pi_eps0;
}

double PhysicalBinding::mass_kg() const { return mass_amu * constants::amu; }

void PhysicalBinding::validate() const {
  if (!(dipole_debye > 0.0)) throw std::invalid_argument("binding: dipole must be > 0");
  if (!(mass_amu > 0.0)) throw std::invalid_argument("binding: mass must be > 0");
  if (rotational_constant_ghz < 0.0 || spin_rotation_mhz < 0.0 || wavelength_nm < 0.0)
    throw std::invalid_argument("binding: spectroscopic constants must be >= 0");
}

PhysicalBinding PhysicalBinding::lics() {
  return {"LiCs", 3.0, 139.9, 5.8, 0.0, 600.0};
}

PhysicalBinding PhysicalBinding::sro() {
  return {"SrO", 8.9, 103.6, 10.13, 0.0, 600.0};
}

PhysicalBinding PhysicalBinding::by_name(const std::string& name) {
  if (name == "LiCs" || name == "lics") return lics();
  if (name == "SrO" || name == "sro") return sro();
  throw std::invalid_argument("unknown binding: " + name);
}

Quantity quantity_from_tag(const std::string& tag) {
  if (tag == "length") return Quantity::length;
  if (tag == "energy") return Quantity::energy;
  if (tag == "frequency") return Quantity::frequency;
  if (tag == "time") return Quantity::time;
  if (tag == "force") return Quantity::force;
  throw std::invalid_argument("unknown unit tag: " + tag);
}

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::length: return "length";
    case Quantity::energy: return "energy";
    case Quantity::frequency: return "frequency";
    case Quantity::time: return "time";
    case Quantity::force: return "force";
  }
  return "?";
}

double lattice_spacing_m(const ModelParams& params, const PhysicalBinding& binding) {
  binding.validate();
  params.validate();
  const double d = binding.interaction_d();
  return d * binding.mass_kg() / (constants::hbar * constants::hbar * params.r_d);
}

namespace {

// SI size of one dimensionless unit.
double unit_si(const ModelParams& params, const PhysicalBinding& binding, Quantity q) {
  const double a = lattice_spacing_m(params, binding);
  const double d = binding.interaction_d();
  const double e0 = d / (a * a * a);  // D/a^3 [J]
  switch (q) {
    case Quantity::length: return a;
    case Quantity::energy: return e0;
    case Quantity::frequency: return e0 / constants::hbar;  // rad/s
    case Quantity::time: return constants::hbar / e0;
    case Quantity::force: return e0 / a;
  }
  throw std::logic_error("unreachable");
}

}  // namespace

double to_physical(const ModelParams& params, const PhysicalBinding& binding,
                   double value, Quantity q) {
  return value * unit_si(params, binding, q);
}

double to_dimensionless(const ModelParams& params, const PhysicalBinding& binding,
                        double si_value, Quantity q) {
  return si_value / unit_si(params, binding, q);
}

TweezerWindow tweezer_constraints(const ModelParams& params, double sigma_tw_a,
                                  const PhysicalBinding& binding,
                                  double safety_factor) {
  if (!(sigma_tw_a > 0.0)) throw std::invalid_argument("sigma_tw must be > 0");
  if (!(safety_factor > 0.0)) throw std::invalid_argument("safety factor must be > 0");
  binding.validate();

  const double a = lattice_spacing_m(params, binding);
  const double m = binding.mass_kg();
  const double d = binding.interaction_d();
  const double sigma = sigma_tw_a * a;

  TweezerWindow w;
  // localization: sqrt(hbar/2 m omega) <= a, implemented verbatim
  w.omega_min = constants::hbar / (2.0 * m * a * a);
  // force: 3 sqrt(e) D/a^4 >= safety * m omega^2 sigma
  const double fmax = 3.0 * std::sqrt(std::exp(1.0)) * d / (a * a * a * a);
  w.omega_max = std::sqrt(fmax / (safety_factor * m * sigma));
  if (!std::isfinite(w.omega_max))
    w.omega_max = std::numeric_limits<double>::infinity();
  w.feasible = w.omega_min <= w.omega_max;
  return w;
}

}  // namespace dipsim
