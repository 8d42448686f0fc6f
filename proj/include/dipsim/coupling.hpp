#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dipsim/crystal.hpp"
#include "dipsim/params.hpp"
#include "dipsim/phonons.hpp"

namespace dipsim {

struct ResonanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-mode spin-phonon couplings
//   kappa_k^{ij} = sqrt(hbar/2 m omega_k) v'_dd(r0_ij) . (zeta_k^i - zeta_k^j)
//   lambda_k^i   = sum_{j != i} kappa_k^{ij}
// in units of D/a^3. Zero-frequency translation modes are dropped from the
// table; any other non-positive frequency is an error.
struct CouplingTable {
  std::vector<int> mode_index;         // position in the source spectrum
  std::vector<double> omega;           // [D/(hbar a^3)]
  std::vector<Eigen::MatrixXd> kappa;  // per mode, n x n symmetric
  Eigen::MatrixXd lambda;              // modes x n
  std::vector<int> dropped_modes;      // rejected translation modes
  double omega0 = 0.0;                 // drive frequency [D/(hbar a^3)]
  std::vector<double> detuning;        // Delta_k = omega_k - omega0

  int n_modes() const { return static_cast<int>(omega.size()); }
  int n_molecules() const { return static_cast<int>(lambda.cols()); }
  void set_drive(double w0);
  // table position of a spectrum mode index, -1 if dropped
  int position_of(int spectrum_mode) const;
};

CouplingTable spin_phonon_couplings(const PhononSpectrum& spec,
                                    const EquilibriumResult& eq,
                                    const ModelParams& params);

// Polaron-transformed effective spin-spin model. u(i,j) is the coefficient of
// sigma_w^i sigma_w^j counting each unordered pair once:
//   u_ij = (eps^2/2) v_dd(r0_ij) - (eps^2/2) sum_k lambda_k^i lambda_k^j / Delta_k.
// The phonon-mediated part and the polaron shift follow the exact
// displaced-oscillator result (see polaron_oracle), which fixes sign and
// normalization.
struct EffectiveSpinModel {
  Eigen::MatrixXd u;
  Eigen::MatrixXd u_direct;
  Eigen::MatrixXd u_pm;
  Eigen::VectorXd b_eff;  // per-site effective field [D/a^3]
  double e_p = 0.0;       // polaron shift [D/a^3]
  double omega0 = 0.0;
  bool rwa_ok = true;     // v_dd, kappa << omega0/eps
  double rwa_margin = 0.0;
};

double pm_pair_coefficient(double epsilon, double lambda_i, double lambda_j,
                           double detuning);

EffectiveSpinModel effective_spin_model(const CouplingTable& table,
                                        const EquilibriumResult& eq,
                                        const ModelParams& params);

// Worst-case polaron displacement between adjacent molecules (and the
// marker-target pair), relative to a. The per-mode spin factor is
// (1/2) sum_i |eps lambda_k^i / Delta_k| by default (half_sum), matching the
// exact phonon-mediated normalization; full_sum keeps the literal sum.
enum class SpinSumConvention { half_sum, full_sum };

struct DisplacementOptions {
  SpinSumConvention convention = SpinSumConvention::half_sum;
};

double displacement_bound(const CouplingTable& table, const PhononSpectrum& spec,
                          const EquilibriumResult& eq, const ModelParams& params,
                          const DisplacementOptions& opt = {});

struct DetuningSolution {
  double omega0 = 0.0;
  double delta_r = 0.0;  // omega_R - omega0
  double delta_u = 0.0;  // achieved bound (<= target)
};

struct DetuningResult {
  DetuningSolution below;  // omega0 < omega_R (Delta_R > 0)
  DetuningSolution above;  // omega0 > omega_R (Delta_R < 0)
  int mode_r = -1;         // spectrum mode index
  double gap_to_nearest = 0.0;
};

// Finds |Delta_R| around mode R such that the displacement bound equals the
// target; bisection between the resonance guard and half the gap to the
// nearest other mode. Throws InfeasibleError when even the band-edge detuning
// exceeds the bound.
DetuningResult optimize_detuning(const CouplingTable& table,
                                 const PhononSpectrum& spec,
                                 const EquilibriumResult& eq,
                                 const ModelParams& params, int spectrum_mode_r,
                                 double target_delta_u_bar,
                                 const DisplacementOptions& opt = {});

struct GateMetrics {
  double u0 = 0.0;
  double u_res = 0.0;
  double ratio = 0.0;  // |u0|/u_res, inf when u_res = 0
  int marker = -1;
  int target = -1;
  // hbar phi / |U0| in units of hbar a^3/D
  double gate_time(double phi) const;
};

GateMetrics gate_metrics(const EffectiveSpinModel& model, int marker, int target);

// Closed-form bilayer estimates (both sign choices of the phonon-mediated
// term):
//   U0    ~ (D/a^3) (eps^2/beta^3 +- 3 eps dubar/beta^4)
//   U_res ~ (D/a^3) (eps^2/2 +- eps dubar (3/4)(2 beta^3 - 3 beta)/(1+beta^2)^{7/2})
struct AnalyticEstimates {
  double u0_direct = 0.0;
  double u0_pm = 0.0;
  double u0_plus = 0.0;
  double u0_minus = 0.0;
  double u_res_direct = 0.0;
  double u_res_pm = 0.0;  // signed term
  double u_res_plus = 0.0;
  double u_res_minus = 0.0;
};

AnalyticEstimates analytic_gate_estimates(const ModelParams& params);

// Exact diagonalization of two spins coupled to one boson mode in the rotating
// frame, H = Delta a^dag a + (eps/2)(l1 s1 + l2 s2)(a + a^dag) + direct s1 s2.
// The effective sigma sigma coefficient is extracted from the four dressed
// n=0-manifold energies, (E++ + E-- - E+- - E-+)/4.
struct PolaronOracleInput {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double epsilon = 0.0;
  double detuning = 0.0;  // hbar Delta [D/a^3], != 0
  double direct = 0.0;    // direct sigma sigma coefficient [D/a^3]
  int fock_cutoff = 40;   // >= 20
};

struct PolaronOracleResult {
  double sigma_sigma = 0.0;
  double constant = 0.0;  // spin-independent shift of the manifold
  double cutoff_shift = 0.0;
};

PolaronOracleResult polaron_oracle(const PolaronOracleInput& in);

// Exports
std::string lambda_csv(const CouplingTable& table);
std::string effective_model_csv(const EffectiveSpinModel& model,
                                const EquilibriumResult& eq);

struct GateSummary {
  double u0 = 0, u_res = 0, ratio = 0, omega0 = 0, delta_r = 0, delta_u = 0,
         e_p = 0;
};
std::string gate_summary_json(const GateSummary& s);

}  // namespace dipsim
