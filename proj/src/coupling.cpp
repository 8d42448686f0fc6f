#include "dipsim/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dipsim/csvio.hpp"
#include "json.hpp"

namespace dipsim {

void CouplingTable::set_drive(double w0) {
  omega0 = w0;
  detuning.resize(omega.size());
  for (size_t k = 0; k < omega.size(); ++k) detuning[k] = omega[k] - w0;
}

int CouplingTable::position_of(int spectrum_mode) const {
  for (size_t k = 0; k < mode_index.size(); ++k)
    if (mode_index[k] == spectrum_mode) return int(k);
  return -1;
}

CouplingTable spin_phonon_couplings(const PhononSpectrum& spec,
                                    const EquilibriumResult& eq,
                                    const ModelParams& params) {
  const Geometry& g = eq.geometry;
  const int n = g.n();
  if (spec.n_molecules != n)
    throw std::invalid_argument("spectrum and equilibrium sizes disagree");

  // image-summed pair gradients, antisymmetric under i <-> j
  std::vector<Eigen::Vector3d> grads(size_t(n) * n, Eigen::Vector3d::Zero());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Eigen::Vector3d gv = pair_vdd_grad(g, g.pair_delta(i, j));
      grads[size_t(i) * n + j] = gv;
      grads[size_t(j) * n + i] = -gv;
    }
  }

  CouplingTable table;
  table.lambda.resize(0, n);
  std::vector<Eigen::VectorXd> lambda_rows;
  const double zero_tol = 1e-8;

  for (int k = 0; k < spec.n_modes(); ++k) {
    if (spec.eigenvalue[k] <= zero_tol) {
      // acceptable only for rigid translations, which carry no coupling
      double max_rel = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          max_rel = std::max(max_rel, (spec.modes.col(k).segment<3>(3 * i) -
                                       spec.modes.col(k).segment<3>(3 * j))
                                          .norm());
      if (max_rel < 1e-6) {
        table.dropped_modes.push_back(k);
        continue;
      }
      throw std::runtime_error(
          "spin_phonon_couplings: non-translational mode with omega <= 0");
    }
    const double zp = params.zero_point_length(spec.omega[k]);
    Eigen::MatrixXd kap = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const Eigen::Vector3d dz = spec.modes.col(k).segment<3>(3 * i) -
                                   spec.modes.col(k).segment<3>(3 * j);
        const double val = zp * grads[size_t(i) * n + j].dot(dz);
        kap(i, j) = val;
        kap(j, i) = val;
      }
    }
    Eigen::VectorXd lam(n);
    for (int i = 0; i < n; ++i) lam(i) = kap.row(i).sum();
    table.mode_index.push_back(k);
    table.omega.push_back(spec.omega[k]);
    table.kappa.push_back(std::move(kap));
    lambda_rows.push_back(std::move(lam));
  }

  table.lambda.resize(int(lambda_rows.size()), n);
  for (size_t k = 0; k < lambda_rows.size(); ++k)
    table.lambda.row(int(k)) = lambda_rows[k].transpose();
  return table;
}

double pm_pair_coefficient(double epsilon, double lambda_i, double lambda_j,
                           double detuning) {
  return -0.5 * epsilon * epsilon * lambda_i * lambda_j / detuning;
}

EffectiveSpinModel effective_spin_model(const CouplingTable& table,
                                        const EquilibriumResult& eq,
                                        const ModelParams& params) {
  const Geometry& g = eq.geometry;
  const int n = g.n();
  if (table.n_molecules() != n)
    throw std::invalid_argument("coupling table and equilibrium sizes disagree");
  if (table.detuning.size() != table.omega.size())
    throw std::invalid_argument("drive frequency not set (call set_drive)");
  for (double d : table.detuning)
    if (std::abs(d) < 1e-9)
      throw ResonanceError("drive resonant with a phonon mode (|Delta_k| < 1e-9)");

  const double eps = params.epsilon;
  EffectiveSpinModel m;
  m.omega0 = table.omega0;
  m.u_direct = Eigen::MatrixXd::Zero(n, n);
  m.u_pm = Eigen::MatrixXd::Zero(n, n);
  m.b_eff = Eigen::VectorXd::Zero(n);

  double max_vdd = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = pair_vdd(g, g.pair_delta(i, j));
      max_vdd = std::max(max_vdd, std::abs(v));
      m.u_direct(i, j) = 0.5 * eps * eps * v;
      m.u_direct(j, i) = m.u_direct(i, j);
      m.b_eff(i) += 2.0 * eps * v;
      m.b_eff(j) += 2.0 * eps * v;
      double pm = 0.0;
      for (int k = 0; k < table.n_modes(); ++k)
        pm += pm_pair_coefficient(eps, table.lambda(k, i), table.lambda(k, j),
                                  table.detuning[k]);
      m.u_pm(i, j) = pm;
      m.u_pm(j, i) = pm;
    }
  }
  m.u = m.u_direct + m.u_pm;

  m.e_p = 0.0;
  for (int k = 0; k < table.n_modes(); ++k)
    for (int i = 0; i < n; ++i)
      m.e_p += -0.25 * eps * eps * table.lambda(k, i) * table.lambda(k, i) /
               table.detuning[k];

  double max_kappa = 0.0;
  for (const auto& kap : table.kappa)
    max_kappa = std::max(max_kappa, kap.cwiseAbs().maxCoeff());
  const double bound = std::max(max_vdd, max_kappa);
  m.rwa_margin = bound > 0.0 && eps > 0.0
                     ? (std::abs(table.omega0) / eps) / bound
                     : std::numeric_limits<double>::infinity();
  m.rwa_ok = m.rwa_margin >= 10.0;
  return m;
}

namespace {

std::vector<std::pair<int, int>> adjacent_pairs(const Geometry& g) {
  std::vector<int> crystal;
  for (int i = 0; i < g.n(); ++i)
    if (g.layers[i] == Layer::crystal) crystal.push_back(i);
  std::sort(crystal.begin(), crystal.end(), [&](int a, int b) {
    return g.positions[a].x() < g.positions[b].x();
  });
  std::vector<std::pair<int, int>> pairs;
  for (size_t k = 0; k + 1 < crystal.size(); ++k)
    pairs.emplace_back(crystal[k], crystal[k + 1]);
  if (g.boundary == Boundary::periodic && crystal.size() > 2)
    pairs.emplace_back(crystal.back(), crystal.front());
  const int mi = g.marker_index();
  if (mi >= 0 && g.marker_site >= 0) pairs.emplace_back(mi, g.marker_site);
  return pairs;
}

}  // namespace

double displacement_bound(const CouplingTable& table, const PhononSpectrum& spec,
                          const EquilibriumResult& eq, const ModelParams& params,
                          const DisplacementOptions& opt) {
  if (table.detuning.size() != table.omega.size())
    throw std::invalid_argument("drive frequency not set (call set_drive)");
  const double eps = params.epsilon;
  const int n = table.n_molecules();

  std::vector<double> spin_sum(table.n_modes());
  for (int k = 0; k < table.n_modes(); ++k) {
    const double dk = table.detuning[k];
    if (std::abs(dk) < 1e-9)
      throw ResonanceError("displacement bound diverges (|Delta_k| < 1e-9)");
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(eps * table.lambda(k, i) / dk);
    if (opt.convention == SpinSumConvention::half_sum) s *= 0.5;
    spin_sum[k] = s;
  }

  double worst = 0.0;
  for (const auto& [i, j] : adjacent_pairs(eq.geometry)) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    for (int k = 0; k < table.n_modes(); ++k) {
      const Eigen::Vector3d dz = spec.modes.col(table.mode_index[k]).segment<3>(3 * i) -
                                 spec.modes.col(table.mode_index[k]).segment<3>(3 * j);
      acc += dz * params.zero_point_length(table.omega[k]) * spin_sum[k];
    }
    worst = std::max(worst, acc.norm());
  }
  return worst;
}

DetuningResult optimize_detuning(const CouplingTable& table,
                                 const PhononSpectrum& spec,
                                 const EquilibriumResult& eq,
                                 const ModelParams& params, int spectrum_mode_r,
                                 double target_delta_u_bar,
                                 const DisplacementOptions& opt) {
  const int pos = table.position_of(spectrum_mode_r);
  if (pos < 0) throw std::invalid_argument("resonant mode not in coupling table");
  const double omega_r = table.omega[pos];

  double gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < table.n_modes(); ++k)
    if (k != pos) gap = std::min(gap, std::abs(table.omega[k] - omega_r));
  if (!std::isfinite(gap)) gap = omega_r;  // single-mode system
  if (!(gap > 0.0))
    throw InfeasibleError("resonant mode is degenerate with another mode");

  // stripped copy (kappa is not needed for the bound) so the bisection
  // does not copy the full coupling tensors
  CouplingTable t;
  t.mode_index = table.mode_index;
  t.omega = table.omega;
  t.lambda = table.lambda;
  auto bound_at = [&](double omega0) {
    t.set_drive(omega0);
    return displacement_bound(t, spec, eq, params, opt);
  };

  DetuningResult res;
  res.mode_r = spectrum_mode_r;
  res.gap_to_nearest = gap;

  for (int side = 0; side < 2; ++side) {
    const double sgn = side == 0 ? +1.0 : -1.0;  // Delta_R = omega_R - omega0
    double lo = std::max(2e-9, 1e-12 * omega_r);
    double hi = 0.45 * gap;
    if (hi <= lo)
      throw InfeasibleError("no detuning window between resonance guard and gap");
    const double f_hi = bound_at(omega_r - sgn * hi);
    if (f_hi > target_delta_u_bar)
      throw InfeasibleError(
          "displacement bound exceeds the target even at the band-edge detuning");
    const double f_lo = bound_at(omega_r - sgn * lo);
    DetuningSolution sol;
    if (f_lo <= target_delta_u_bar) {
      // even the closest allowed detuning satisfies the bound
      sol.delta_r = sgn * lo;
    } else {
      double a = lo, b = hi;
      for (int it = 0; it < 200 && (b - a) > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (a + b);
        if (bound_at(omega_r - sgn * mid) > target_delta_u_bar)
          a = mid;
        else
          b = mid;
      }
      sol.delta_r = sgn * b;  // satisfies the bound by construction
    }
    sol.omega0 = omega_r - sol.delta_r;
    sol.delta_u = bound_at(sol.omega0);
    if (side == 0)
      res.below = sol;
    else
      res.above = sol;
  }
  return res;
}

double GateMetrics::gate_time(double phi) const { return phi / std::abs(u0); }

GateMetrics gate_metrics(const EffectiveSpinModel& model, int marker, int target) {
  const int n = int(model.u.rows());
  if (marker < 0 || target < 0 || marker >= n || target >= n || marker == target)
    throw std::invalid_argument("bad marker/target indices");
  GateMetrics gm;
  gm.marker = marker;
  gm.target = target;
  gm.u0 = model.u(marker, target);
  gm.u_res = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if ((i == marker && j == target) || (i == target && j == marker)) continue;
      gm.u_res = std::max(gm.u_res, std::abs(model.u(i, j)));
    }
  gm.ratio = gm.u_res > 0.0 ? std::abs(gm.u0) / gm.u_res
                            : std::numeric_limits<double>::infinity();
  return gm;
}

AnalyticEstimates analytic_gate_estimates(const ModelParams& params) {
  const double eps = params.epsilon;
  const double beta = params.b_over_a;
  const double dubar = params.delta_u_bar;
  AnalyticEstimates a;
  a.u0_direct = eps * eps / (beta * beta * beta);
  a.u0_pm = 3.0 * eps * dubar / (beta * beta * beta * beta);
  a.u0_plus = a.u0_direct + a.u0_pm;
  a.u0_minus = a.u0_direct - a.u0_pm;
  a.u_res_direct = 0.5 * eps * eps;
  const double b2 = beta * beta;
  a.u_res_pm = eps * dubar * 0.75 * (2.0 * beta * b2 - 3.0 * beta) /
               std::pow(1.0 + b2, 3.5);
  a.u_res_plus = a.u_res_direct + a.u_res_pm;
  a.u_res_minus = a.u_res_direct - a.u_res_pm;
  return a;
}

namespace {

// dressed n=0-manifold energy of H = Delta n + g sqrt(n+1) ladder + const
double sector_energy(double delta, double g, double direct, int cutoff) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
  for (int nn = 0; nn <= cutoff; ++nn) {
    h(nn, nn) = delta * nn + direct;
    if (nn + 1 <= cutoff) {
      const double c = g * std::sqrt(double(nn + 1));
      h(nn, nn + 1) = c;
      h(nn + 1, nn) = c;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  // for Delta > 0 the dressed vacuum manifold is the ground state, for
  // Delta < 0 it sits at the top of the inverted rotating-frame spectrum
  return delta > 0.0 ? es.eigenvalues()(0) : es.eigenvalues()(cutoff);
}

double oracle_sigma_sigma(const PolaronOracleInput& in, int cutoff,
                          double* constant) {
  const double spins[2] = {+1.0, -1.0};
  double e[2][2];
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2) {
      const double g =
          0.5 * in.epsilon * (in.lambda1 * spins[s1] + in.lambda2 * spins[s2]);
      e[s1][s2] = sector_energy(in.detuning, g, in.direct * spins[s1] * spins[s2],
                                cutoff);
    }
  if (constant) *constant = 0.25 * (e[0][0] + e[1][1] + e[0][1] + e[1][0]);
  return 0.25 * (e[0][0] + e[1][1] - e[0][1] - e[1][0]);
}

}  // namespace

PolaronOracleResult polaron_oracle(const PolaronOracleInput& in) {
  if (in.fock_cutoff < 20)
    throw std::invalid_argument("polaron_oracle: Fock cutoff must be >= 20");
  if (std::abs(in.detuning) < 1e-12)
    throw ResonanceError("polaron_oracle: detuning must be nonzero");
  PolaronOracleResult r;
  r.sigma_sigma = oracle_sigma_sigma(in, in.fock_cutoff, &r.constant);
  const double refined = oracle_sigma_sigma(in, 2 * in.fock_cutoff, nullptr);
  r.cutoff_shift = std::abs(refined - r.sigma_sigma);
  if (r.cutoff_shift > 1e-8)
    throw ConvergenceError("polaron_oracle: result not converged in Fock cutoff");
  return r;
}

std::string lambda_csv(const CouplingTable& table) {
  std::ostringstream os;
  os << "k,mode,omega,detuning,molecule,lambda\n";
  const bool has_drive = table.detuning.size() == table.omega.size();
  for (int k = 0; k < table.n_modes(); ++k)
    for (int i = 0; i < table.n_molecules(); ++i)
      os << k << ',' << table.mode_index[k] << ',' << csv_num(table.omega[k])
         << ',' << (has_drive ? csv_num(table.detuning[k]) : std::string("nan"))
         << ',' << i << ',' << csv_num(table.lambda(k, i)) << '\n';
  return os.str();
}

std::string effective_model_csv(const EffectiveSpinModel& model,
                                const EquilibriumResult& eq) {
  std::ostringstream os;
  os << "i,j,r0,v_dd,u_direct,u_pm,u\n";
  const Geometry& g = eq.geometry;
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j) {
      const Eigen::Vector3d d = g.pair_delta(i, j);
      os << i << ',' << j << ',' << csv_num(d.norm()) << ','
         << csv_num(pair_vdd(g, d)) << ',' << csv_num(model.u_direct(i, j)) << ','
         << csv_num(model.u_pm(i, j)) << ',' << csv_num(model.u(i, j)) << '\n';
    }
  return os.str();
}

std::string gate_summary_json(const GateSummary& s) {
  nlohmann::json j;
  auto put = [&](const char* key, double v) {
    if (std::isinf(v))
      j[key] = v > 0 ? "inf" : "-inf";
    else
      j[key] = v;
  };
  put("U0", s.u0);
  put("U_res", s.u_res);
  put("ratio", s.ratio);
  put("omega0", s.omega0);
  put("delta_R", s.delta_r);
  put("delta_u", s.delta_u);
  put("E_p", s.e_p);
  return j.dump(2);
}

}  // namespace dipsim
