#include "dipsim/phonons.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dipsim/csvio.hpp"

namespace dipsim {

DynamicalMatrix build_dynamical_matrix(const EquilibriumResult& eq,
                                       const TrapSpec& trap) {
  const Geometry& g = eq.geometry;
  g.validate();
  DynamicalMatrix dm;
  dm.equilibrium = eq;
  for (int i = 0; i < g.n(); ++i)
    for (int a = 0; a < 3; ++a)
      if (!g.frozen[i][a]) dm.coords.push_back(3 * i + a);
  const Eigen::MatrixXd full = potential_hessian(g, trap);
  const int m = int(dm.coords.size());
  dm.phi.resize(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) dm.phi(a, b) = full(dm.coords[a], dm.coords[b]);
  dm.phi = 0.5 * (dm.phi + dm.phi.transpose().eval());
  return dm;
}

std::string to_string(Branch b) {
  switch (b) {
    case Branch::acoustic_x: return "acoustic_x";
    case Branch::optical_y: return "optical_y";
    case Branch::optical_z: return "optical_z";
    case Branch::local_x: return "local_x";
    case Branch::local_y: return "local_y";
    case Branch::local_z: return "local_z";
    case Branch::mixed: return "mixed";
  }
  return "?";
}

double PhononSpectrum::axis_weight(int k, int axis) const {
  double w = 0.0;
  for (int i = 0; i < n_molecules; ++i) {
    const double c = modes(3 * i + axis, k);
    w += c * c;
  }
  return w;
}

double PhononSpectrum::molecule_weight(int k, int i) const {
  return modes.col(k).segment<3>(3 * i).squaredNorm();
}

namespace {

// Mirror of the chain about the target site: permutation of molecules with
// the x component negated. Empty when the geometry has no such symmetry.
struct MirrorOp {
  bool valid = false;
  std::vector<int> partner;
  Eigen::VectorXd apply(const Eigen::VectorXd& v, int n) const {
    Eigen::VectorXd out(v.size());
    for (int i = 0; i < n; ++i) {
      const int j = partner[i];
      out(3 * j + 0) = -v(3 * i + 0);
      out(3 * j + 1) = v(3 * i + 1);
      out(3 * j + 2) = v(3 * i + 2);
    }
    return out;
  }
};

MirrorOp detect_mirror(const Geometry& g) {
  MirrorOp op;
  if (g.marker_site < 0) return op;
  const double xc = g.positions[g.marker_site].x();
  const int n = g.n();
  op.partner.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d want = g.positions[i];
    want.x() = 2.0 * xc - want.x();
    int found = -1;
    for (int j = 0; j < n; ++j) {
      if (g.layers[j] != g.layers[i]) continue;
      Eigen::Vector3d d = g.positions[j] - want;
      if (g.boundary == Boundary::periodic)
        d.x() -= g.box_length * std::round(d.x() / g.box_length);
      if (d.norm() < 1e-6) {
        found = j;
        break;
      }
    }
    if (found < 0) return op;
    op.partner[i] = found;
  }
  op.valid = true;
  return op;
}

void sign_fix(Eigen::MatrixXd& modes) {
  for (int k = 0; k < modes.cols(); ++k) {
    int arg = 0;
    double best = 0.0;
    for (int c = 0; c < modes.rows(); ++c) {
      const double a = std::abs(modes(c, k));
      if (a > best + 1e-12) {
        best = a;
        arg = c;
      }
    }
    if (modes(arg, k) < 0.0) modes.col(k) = -modes.col(k);
  }
}

// Rotate a degenerate group onto eigenvectors of a symmetric g x g matrix
// (ascending eigenvalue order).
void rotate_group(Eigen::MatrixXd& v, const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  v = v * es.eigenvectors();
}

}  // namespace

PhononSpectrum normal_modes(const DynamicalMatrix& dm, double r_d) {
  if (!(r_d > 0.0)) throw std::invalid_argument("r_d must be > 0");
  const Geometry& g = dm.equilibrium.geometry;
  const int n = g.n();
  const int m = int(dm.coords.size());
  if (dm.phi.rows() != m || dm.phi.cols() != m)
    throw std::invalid_argument("dynamical matrix size mismatch");
  if ((dm.phi - dm.phi.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, dm.phi.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("dynamical matrix must be symmetric");

  // Detect exact axis decoupling; solve per axis block when possible so
  // degenerate transverse modes never mix axes.
  std::array<std::vector<int>, 3> by_axis;
  for (int c = 0; c < m; ++c) by_axis[dm.coords[c] % 3].push_back(c);
  bool decoupled = true;
  const double scale = std::max(1.0, dm.phi.cwiseAbs().maxCoeff());
  for (int a = 0; a < m && decoupled; ++a)
    for (int b = 0; b < m; ++b)
      if (dm.coords[a] % 3 != dm.coords[b] % 3 &&
          std::abs(dm.phi(a, b)) > 1e-13 * scale) {
        decoupled = false;
        break;
      }

  struct Raw {
    double eig;
    Eigen::VectorXd vec;  // over free coords
    int axis_hint;
  };
  std::vector<Raw> raw;
  raw.reserve(m);

  if (decoupled) {
    for (int axis = 0; axis < 3; ++axis) {
      const auto& idx = by_axis[axis];
      if (idx.empty()) continue;
      const int ma = int(idx.size());
      Eigen::MatrixXd sub(ma, ma);
      for (int a = 0; a < ma; ++a)
        for (int b = 0; b < ma; ++b) sub(a, b) = dm.phi(idx[a], idx[b]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
      for (int k = 0; k < ma; ++k) {
        Raw r;
        r.eig = es.eigenvalues()(k);
        r.vec = Eigen::VectorXd::Zero(m);
        for (int a = 0; a < ma; ++a) r.vec(idx[a]) = es.eigenvectors()(a, k);
        r.axis_hint = axis;
        raw.push_back(std::move(r));
      }
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dm.phi);
    for (int k = 0; k < m; ++k) {
      Raw r;
      r.eig = es.eigenvalues()(k);
      r.vec = es.eigenvectors().col(k);
      r.axis_hint = -1;
      raw.push_back(std::move(r));
    }
  }

  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
    if (a.eig != b.eig) return a.eig < b.eig;
    return a.axis_hint < b.axis_hint;
  });

  for (const Raw& r : raw)
    if (r.eig < -1e-8)
      throw StabilityError("imaginary phonon frequency: eigenvalue " +
                           std::to_string(r.eig));

  PhononSpectrum spec;
  spec.n_molecules = n;
  spec.r_d = r_d;
  spec.modes = Eigen::MatrixXd::Zero(3 * n, m);
  for (int k = 0; k < m; ++k) {
    const Raw& r = raw[k];
    spec.eigenvalue.push_back(r.eig);
    spec.omega.push_back(std::sqrt(std::max(0.0, r.eig)) / std::sqrt(r_d));
    for (int c = 0; c < m; ++c) spec.modes(dm.coords[c], k) = r.vec(c);
  }

  // Deterministic treatment of (near-)degenerate groups: rotate onto per-axis
  // weight eigenvectors, then onto mirror-parity eigenvectors.
  const MirrorOp mirror = detect_mirror(g);
  const double tol_group = 1e-9 * std::max(1.0, std::abs(spec.eigenvalue.back()));
  int k0 = 0;
  while (k0 < m) {
    int k1 = k0 + 1;
    while (k1 < m && spec.eigenvalue[k1] - spec.eigenvalue[k1 - 1] <= tol_group)
      ++k1;
    const int gsz = k1 - k0;
    if (gsz > 1) {
      Eigen::MatrixXd v = spec.modes.middleCols(k0, gsz);
      // Axis-index operator (eigenvalues near 0/1/2 for x/y/z-pure modes)
      // plus a weak mirror-parity term: one diagonalization yields an
      // axis- and parity-adapted basis with a well separated spectrum.
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(gsz, gsz);
      for (int axis = 0; axis < 3; ++axis) {
        for (int a = 0; a < gsz; ++a)
          for (int b = a; b < gsz; ++b) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
              acc += v(3 * i + axis, a) * v(3 * i + axis, b);
            s(a, b) += axis * acc;
            if (b != a) s(b, a) += axis * acc;
          }
      }
      if (mirror.valid) {
        Eigen::MatrixXd rv(3 * n, gsz);
        for (int c = 0; c < gsz; ++c) rv.col(c) = mirror.apply(v.col(c), n);
        Eigen::MatrixXd p = v.transpose() * rv;
        s += 0.1 * 0.5 * (p + p.transpose().eval());
      }
      rotate_group(v, s);
      // re-orthonormalize within the group for numerical hygiene
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(3 * n, gsz);
      spec.modes.middleCols(k0, gsz) = q;
    }
    k0 = k1;
  }
  sign_fix(spec.modes);

  spec.ipr.resize(m);
  for (int k = 0; k < m; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = spec.molecule_weight(k, i);
      s += w * w;
    }
    spec.ipr[k] = s;
  }
  spec.branch.assign(m, Branch::mixed);
  return spec;
}

double marker_target_weight(const PhononSpectrum& spec, const Geometry& g, int k) {
  const int mi = g.marker_index();
  if (mi < 0 || g.marker_site < 0) return 0.0;
  return spec.molecule_weight(k, mi) + spec.molecule_weight(k, g.marker_site);
}

LocalModeSummary classify_modes(PhononSpectrum& spec, const Geometry& g,
                                const ClassifyOptions& opt) {
  const int m = spec.n_modes();
  std::vector<int> dominant(m, -1);
  for (int k = 0; k < m; ++k) {
    for (int axis = 0; axis < 3; ++axis) {
      if (spec.axis_weight(k, axis) > opt.axis_threshold) {
        dominant[k] = axis;
        break;
      }
    }
  }

  const Branch base[3] = {Branch::acoustic_x, Branch::optical_y, Branch::optical_z};
  const Branch local[3] = {Branch::local_x, Branch::local_y, Branch::local_z};
  LocalModeSummary summary;

  for (int axis = 0; axis < 3; ++axis) {
    std::vector<int> members;
    for (int k = 0; k < m; ++k)
      if (dominant[k] == axis) members.push_back(k);
    double band_min = 0.0, band_max = 0.0;
    bool have_band = false;
    for (int k : members) {
      if (spec.participation(k) < opt.participation_threshold) continue;
      if (!have_band) {
        band_min = band_max = spec.omega[k];
        have_band = true;
      } else {
        band_min = std::min(band_min, spec.omega[k]);
        band_max = std::max(band_max, spec.omega[k]);
      }
    }
    for (int k : members) spec.branch[k] = base[axis];
    if (!have_band) continue;
    const double bw = band_max - band_min;
    const double gap = opt.band_gap_frac * std::max(bw, 1e-9 * band_max);
    for (int k : members) {
      if (spec.participation(k) >= opt.participation_threshold) continue;
      if (spec.omega[k] > band_max + gap || spec.omega[k] < band_min - gap) {
        spec.branch[k] = local[axis];
        summary.per_axis[axis].push_back(k);
      }
    }
  }
  for (int k = 0; k < m; ++k)
    if (dominant[k] < 0) spec.branch[k] = Branch::mixed;
  (void)g;
  return summary;
}

std::string spectrum_csv(const PhononSpectrum& spec) {
  std::ostringstream os;
  os << "k,omega,branch,ipr\n";
  for (int k = 0; k < spec.n_modes(); ++k)
    os << k << ',' << csv_num(spec.omega[k]) << ',' << to_string(spec.branch[k])
       << ',' << csv_num(spec.ipr[k]) << '\n';
  return os.str();
}

std::string modefunction_csv(const PhononSpectrum& spec) {
  std::ostringstream os;
  os << "k,molecule,axis,amplitude\n";
  for (int k = 0; k < spec.n_modes(); ++k)
    for (int i = 0; i < spec.n_molecules; ++i)
      for (int a = 0; a < 3; ++a)
        os << k << ',' << i << ',' << "xyz"[a] << ','
           << csv_num(spec.modes(3 * i + a, k)) << '\n';
  return os.str();
}

}  // namespace dipsim
