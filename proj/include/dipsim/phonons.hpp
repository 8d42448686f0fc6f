#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "dipsim/crystal.hpp"

namespace dipsim {

// Second-order expansion of the potential at a converged equilibrium, over the
// unconstrained coordinates (m = 1, entries in D/a^5).
struct DynamicalMatrix {
  Eigen::MatrixXd phi;
  std::vector<int> coords;  // row/col -> 3N coordinate index
  EquilibriumResult equilibrium;
};

DynamicalMatrix build_dynamical_matrix(const EquilibriumResult& eq,
                                       const TrapSpec& trap);

enum class Branch {
  acoustic_x,
  optical_y,
  optical_z,
  local_x,
  local_y,
  local_z,
  mixed
};

std::string to_string(Branch b);

struct PhononSpectrum {
  std::vector<double> omega;       // ascending [D/(hbar a^3)]
  std::vector<double> eigenvalue;  // mechanical omega^2 [D/a^5 / m]
  Eigen::MatrixXd modes;           // 3N x K mode functions zeta, orthonormal
  std::vector<Branch> branch;      // filled by classify_modes
  std::vector<double> ipr;         // inverse participation ratio
  int n_molecules = 0;
  double r_d = 1.0;

  int n_modes() const { return static_cast<int>(omega.size()); }
  double participation(int k) const { return 1.0 / ipr[k]; }
  double axis_weight(int k, int axis) const;
  double molecule_weight(int k, int i) const;
};

// Solves the normal-mode problem. Frequencies are reported in D/(hbar a^3)
// via omega = sqrt(eigenvalue)/sqrt(r_d). Axis-decoupled matrices are solved
// per axis block; degenerate subspaces are rotated onto axis- and
// mirror-symmetry eigenvectors and sign-fixed so results are deterministic.
// Throws StabilityError on eigenvalues below -1e-8.
PhononSpectrum normal_modes(const DynamicalMatrix& dm, double r_d);

struct ClassifyOptions {
  double axis_threshold = 0.9;          // axis weight for a pure branch label
  double band_gap_frac = 0.02;          // separation threshold, fraction of bandwidth
  double participation_threshold = 4.0; // molecules
};

struct LocalModeSummary {
  std::array<std::vector<int>, 3> per_axis;  // local mode indices by axis
  int count() const {
    return int(per_axis[0].size() + per_axis[1].size() + per_axis[2].size());
  }
  int unique(int axis) const {
    return per_axis[axis].size() == 1 ? per_axis[axis][0] : -1;
  }
};

// Tags branches by dominant axis weight and flags localized modes that are
// split off their parent band with a small participation number.
LocalModeSummary classify_modes(PhononSpectrum& spec, const Geometry& g,
                                const ClassifyOptions& opt = {});

// Combined marker + target molecule weight of mode k (0 when no marker).
double marker_target_weight(const PhononSpectrum& spec, const Geometry& g, int k);

// CSV: k, omega, branch, ipr. Optional dump: k, molecule, axis, amplitude.
std::string spectrum_csv(const PhononSpectrum& spec);
std::string modefunction_csv(const PhononSpectrum& spec);

}  // namespace dipsim
