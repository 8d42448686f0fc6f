#include "dipsim/dressed.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dipsim {

double LambdaDrive::omega_eff() const {
  return std::hypot(omega_g, omega_e);
}

double LambdaDrive::nu() const { return std::atan2(omega_g, omega_e); }

double LambdaDrive::eta() const { return 0.5 * (phi_g - phi_e); }

void LambdaDrive::validate() const {
  if (omega_g < 0.0 || omega_e < 0.0)
    throw std::invalid_argument("Rabi magnitudes must be >= 0");
  if (!(omega_eff() > 0.0))
    throw std::invalid_argument("drive requires Omega_eff > 0");
}

MixingAngles mixing_angles(double delta_over_omega_eff) {
  const double d = delta_over_omega_eff;
  if (!std::isfinite(d)) throw std::invalid_argument("mixing_angles: non-finite input");
  const double root = std::sqrt(4.0 + d * d);
  MixingAngles a;
  a.xi_alpha = std::atan(0.5 * (-d + root));
  a.xi_gamma = std::atan(0.5 * (d + root));
  return a;
}

Eigen::Vector3d pauli_axis(double nu, double eta) {
  return {std::sin(2.0 * nu) * std::cos(2.0 * eta),
          std::sin(2.0 * nu) * std::sin(2.0 * eta), std::cos(2.0 * nu)};
}

std::pair<double, double> flip_control(double nu, double eta) {
  return {M_PI / 2.0 - nu, eta + M_PI / 2.0};
}

DressedDipole dressed_dipole(double mu0, double mu_rr, const LambdaDrive& drive) {
  drive.validate();
  const MixingAngles a = mixing_angles(drive.detuning / drive.omega_eff());
  DressedDipole d;
  d.xi_alpha = a.xi_alpha;
  d.xi_gamma = a.xi_gamma;
  const double s = std::sin(a.xi_alpha);
  d.mu1 = 0.5 * s * s * (mu_rr - mu0);
  // mu0 1 + 2 mu1 |alpha0><alpha0| = (mu0 + mu1) 1 - mu1 sigma_w
  d.mu0_prime = mu0 + d.mu1;
  d.sigma_w_coeff = -d.mu1;
  d.w = pauli_axis(drive.nu(), drive.eta());
  return d;
}

RampCheck adiabatic_ramp_check(double omega_eff, double delta, double tau_ramp,
                               double safety_factor) {
  if (!(omega_eff > 0.0) || !(delta > 0.0) || !(tau_ramp > 0.0))
    throw std::invalid_argument("adiabatic_ramp_check: all inputs must be > 0");
  RampCheck c;
  c.margin = tau_ramp * delta * delta / omega_eff;
  c.pass = c.margin >= safety_factor;
  return c;
}

ModulationSchedule modulation_schedule(double mu1_peak, double omega0,
                                       double horizon, const ModulationSpec& spec) {
  if (horizon < 0.0) throw std::invalid_argument("horizon must be >= 0");
  if (omega0 < 0.0) throw std::invalid_argument("omega0 must be >= 0");
  if (spec.n_samples < 2) throw std::invalid_argument("need at least 2 samples");

  if (omega0 > 0.0 && spec.omega_eff > 0.0) {
    // each half arch ramps over a quarter period
    const double tau_quarter = (M_PI / 2.0) / omega0;
    const RampCheck c = adiabatic_ramp_check(spec.omega_eff, spec.delta,
                                             tau_quarter, spec.safety_factor);
    if (!c.pass) {
      std::ostringstream os;
      os << "modulation_schedule: half-period switching violates the adiabatic "
            "margin (margin "
         << c.margin << " < " << spec.safety_factor << ")";
      throw std::runtime_error(os.str());
    }
  }

  ModulationSchedule sched;
  sched.samples.reserve(spec.n_samples);
  const auto [nu_f, eta_f] = flip_control(spec.nu, spec.eta);
  for (int i = 0; i < spec.n_samples; ++i) {
    ModulationSample s;
    s.t = horizon * double(i) / double(spec.n_samples);
    const double c = std::cos(omega0 * s.t);
    s.mu1_signed = mu1_peak * c;
    s.mu1_magnitude = std::abs(s.mu1_signed);
    s.flipped = c < 0.0;
    s.nu = s.flipped ? nu_f : spec.nu;
    s.eta = s.flipped ? eta_f : spec.eta;
    s.bias_correction = -s.mu1_signed;
    sched.samples.push_back(s);
  }
  // The signed envelope is exactly mu1_peak cos(omega0 t), so the component at
  // omega0 is the full amplitude (DC limit: constant schedule).
  sched.first_harmonic = omega0 > 0.0 ? mu1_peak : 0.0;
  return sched;
}

LeakageBudget leakage_budget(double omega1, double omega2, double omega_e,
                             double delta_2photon, double gamma_sr, double b_rot,
                             double mu_er, double xi_alpha) {
  if (!(delta_2photon > 0.0))
    throw std::invalid_argument("leakage_budget: delta must be > 0");
  LeakageBudget lb;
  lb.x = std::max(omega1, omega2) / delta_2photon;
  lb.y = omega1 / delta_2photon;
  lb.s = omega1 * omega2 / (delta_2photon * delta_2photon);
  lb.z = gamma_sr > 0.0 ? omega_e / gamma_sr : 0.0;
  lb.effective_rabi = omega1 * omega2 / delta_2photon;
  const double t = std::tan(xi_alpha);
  lb.flip_flop = t * t * mu_er * mu_er;
  lb.flag_delta_below_gamma = delta_2photon <= gamma_sr;
  lb.flag_rabi_below_delta = 10.0 * std::max(omega1, omega2) <= delta_2photon;
  if (b_rot > 0.0 && gamma_sr > 0.0) {
    const double ratio = gamma_sr / b_rot;
    lb.flag_gamma_scale = ratio >= 0.01 / 3.0 && ratio <= 0.01 * 3.0;
  }
  return lb;
}

std::string leakage_to_json(const LeakageBudget& lb) {
  nlohmann::json j;
  j["x"] = lb.x;
  j["y"] = lb.y;
  j["s"] = lb.s;
  j["z"] = lb.z;
  j["effective_rabi"] = lb.effective_rabi;
  j["flags"] = {{"delta_below_gamma", lb.flag_delta_below_gamma},
                {"rabi_below_delta", lb.flag_rabi_below_delta},
                {"gamma_scale", lb.flag_gamma_scale}};
  if (lb.flip_flop != 0.0) j["flip_flop"] = lb.flip_flop;
  return j.dump(2);
}

}  // namespace dipsim
