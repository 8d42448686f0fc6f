#include "dipsim/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "dipsim/csvio.hpp"

namespace dipsim {

int Geometry::marker_index() const {
  for (int i = 0; i < n(); ++i)
    if (layers[i] == Layer::marker) return i;
  return -1;
}

void Geometry::validate() const {
  const size_t m = positions.size();
  if (m < 2) throw std::invalid_argument("geometry needs at least 2 molecules");
  if (layers.size() != m || frozen.size() != m || trap_z_center.size() != m)
    throw std::invalid_argument("geometry arrays have inconsistent sizes");
  int markers = 0;
  for (auto l : layers) markers += (l == Layer::marker);
  if (markers > 1) throw std::invalid_argument("at most one marker molecule");
  if (boundary == Boundary::periodic && !(box_length > 0.0))
    throw std::invalid_argument("periodic geometry requires box_length > 0");
  if (image_cutoff < 1) throw std::invalid_argument("image_cutoff must be >= 1");
}

void Geometry::fold() {
  if (boundary != Boundary::periodic) return;
  for (auto& r : positions) {
    r.x() = std::fmod(r.x(), box_length);
    if (r.x() < 0.0) r.x() += box_length;
  }
}

Eigen::Vector3d Geometry::pair_delta(int i, int j) const {
  Eigen::Vector3d d = positions[i] - positions[j];
  if (boundary == Boundary::periodic)
    d.x() -= box_length * std::round(d.x() / box_length);
  return d;
}

TrapSpec TrapSpec::from_params(const ModelParams& p) {
  TrapSpec t;
  const double wp = p.mech_from_energy_freq(p.omega_perp_or_default());
  t.k_perp = wp * wp;
  if (p.boundary == Boundary::harmonic && p.omega_long) {
    const double wl = p.mech_from_energy_freq(*p.omega_long);
    t.k_long = wl * wl;
  }
  return t;
}

double vdd(const Eigen::Vector3d& r) {
  const double r2 = r.squaredNorm();
  if (r2 == 0.0) throw std::domain_error("v_dd singular at r = 0");
  const double inv_r = 1.0 / std::sqrt(r2);
  const double nz = r.z() * inv_r;
  return (1.0 - 3.0 * nz * nz) * inv_r * inv_r * inv_r;
}

Eigen::Vector3d vdd_grad(const Eigen::Vector3d& r) {
  const double r2 = r.squaredNorm();
  if (r2 == 0.0) throw std::domain_error("v_dd singular at r = 0");
  const double inv_r = 1.0 / std::sqrt(r2);
  const double inv_r4 = inv_r * inv_r * inv_r * inv_r;
  const double nx = r.x() * inv_r, ny = r.y() * inv_r, nz = r.z() * inv_r;
  const double nz2 = nz * nz;
  return 3.0 * inv_r4 *
         Eigen::Vector3d(nx * (5.0 * nz2 - 1.0), ny * (5.0 * nz2 - 1.0),
                         nz * (5.0 * nz2 - 3.0));
}

Eigen::Matrix3d vdd_hessian(const Eigen::Vector3d& r) {
  const double r2 = r.squaredNorm();
  if (r2 == 0.0) throw std::domain_error("v_dd singular at r = 0");
  const double inv_r2 = 1.0 / r2;
  const double inv_r = std::sqrt(inv_r2);
  const double inv_r5 = inv_r2 * inv_r2 * inv_r;
  const double inv_r7 = inv_r5 * inv_r2;
  const double inv_r9 = inv_r7 * inv_r2;
  const double z = r.z();
  Eigen::Matrix3d h;
  for (int a = 0; a < 3; ++a) {
    for (int b = a; b < 3; ++b) {
      double v = -3.0 * (a == b ? inv_r5 : 0.0);
      if (a == 2 && b == 2) v += -6.0 * inv_r5;
      double t7 = 15.0 * r(a) * r(b);
      if (a == 2) t7 += 30.0 * z * r(b);
      if (b == 2) t7 += 30.0 * z * r(a);
      if (a == b) t7 += 15.0 * z * z;
      v += t7 * inv_r7;
      v += -105.0 * z * z * r(a) * r(b) * inv_r9;
      h(a, b) = v;
      h(b, a) = v;
    }
  }
  return h;
}

namespace {

// Euler-Maclaurin sums S_p(K, u) = sum_{n>=K} (n+u)^{-p} for the 1/x^3 image
// tail along the chain axis.
double tail_s3(double k, double u) {
  const double w = 1.0 / (k + u);
  const double w2 = w * w;
  return w2 * (0.5 + 0.5 * w + 0.25 * w2 - w2 * w2 / 12.0 + w2 * w2 * w2 / 12.0);
}

double tail_s4(double k, double u) {
  const double w = 1.0 / (k + u);
  const double w3 = w * w * w;
  return w3 * (1.0 / 3.0 + 0.5 * w + w * w / 3.0 - w * w * w * w / 6.0);
}

struct PairTerms {
  bool images = false;
  double box = 0.0;
  int cutoff = 30;
};

PairTerms pair_terms(const Geometry& g) {
  PairTerms t;
  t.images = g.boundary == Boundary::periodic;
  t.box = g.box_length;
  t.cutoff = g.image_cutoff;
  return t;
}

}  // namespace

double pair_vdd(const Geometry& g, const Eigen::Vector3d& delta) {
  const PairTerms t = pair_terms(g);
  if (!t.images) return vdd(delta);
  double e = 0.0;
  Eigen::Vector3d d = delta;
  for (int n = -t.cutoff; n <= t.cutoff; ++n) {
    d.x() = delta.x() + n * t.box;
    e += vdd(d);
  }
  const double u = delta.x() / t.box;
  const double inv_l3 = 1.0 / (t.box * t.box * t.box);
  e += inv_l3 * (tail_s3(t.cutoff + 1, u) + tail_s3(t.cutoff + 1, -u));
  return e;
}

Eigen::Vector3d pair_vdd_grad(const Geometry& g, const Eigen::Vector3d& delta) {
  const PairTerms t = pair_terms(g);
  if (!t.images) return vdd_grad(delta);
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  Eigen::Vector3d d = delta;
  for (int n = -t.cutoff; n <= t.cutoff; ++n) {
    d.x() = delta.x() + n * t.box;
    grad += vdd_grad(d);
  }
  const double u = delta.x() / t.box;
  const double inv_l4 = 1.0 / (t.box * t.box * t.box * t.box);
  grad.x() += -3.0 * inv_l4 * (tail_s4(t.cutoff + 1, u) - tail_s4(t.cutoff + 1, -u));
  return grad;
}

Eigen::Matrix3d pair_vdd_hessian(const Geometry& g, const Eigen::Vector3d& delta) {
  const PairTerms t = pair_terms(g);
  if (!t.images) return vdd_hessian(delta);
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  Eigen::Vector3d d = delta;
  for (int n = -t.cutoff; n <= t.cutoff; ++n) {
    d.x() = delta.x() + n * t.box;
    h += vdd_hessian(d);
  }
  return h;
}

namespace {

double trap_energy(const Geometry& g, const TrapSpec& trap) {
  double e = 0.0;
  for (int i = 0; i < g.n(); ++i) {
    const auto& r = g.positions[i];
    const double dz = r.z() - g.trap_z_center[i];
    e += 0.5 * trap.k_perp * (r.y() * r.y() + dz * dz);
    e += 0.5 * trap.k_long * r.x() * r.x();
  }
  return e;
}

// Periodic self-image constant: each molecule interacts with its own images
// at n L e_x.
double self_image_energy(const Geometry& g) {
  if (g.boundary != Boundary::periodic) return 0.0;
  const double l3 = g.box_length * g.box_length * g.box_length;
  double s = 0.0;
  for (int n = 1; n <= g.image_cutoff; ++n) s += 1.0 / (double(n) * double(n) * double(n));
  s += tail_s3(g.image_cutoff + 1, 0.0);
  return g.n() * s / l3;
}

void check_collapse(const Geometry& g, double min_dist) {
  for (int i = 0; i < g.n(); ++i) {
    for (int j = i + 1; j < g.n(); ++j) {
      const double d = g.pair_delta(i, j).norm();
      if (d < min_dist) {
        std::ostringstream os;
        os << "crystal collapse: molecules " << i << " and " << j
           << " at distance " << d << " a";
        throw CollapseError(os.str());
      }
    }
  }
}

}  // namespace

double total_energy(const Geometry& g, const TrapSpec& trap) {
  double e = trap_energy(g, trap) + self_image_energy(g);
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j) e += pair_vdd(g, g.pair_delta(i, j));
  return e;
}

Eigen::VectorXd total_gradient(const Geometry& g, const TrapSpec& trap) {
  const int n = g.n();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(3 * n);
  for (int i = 0; i < n; ++i) {
    const auto& r = g.positions[i];
    grad(3 * i + 0) += trap.k_long * r.x();
    grad(3 * i + 1) += trap.k_perp * r.y();
    grad(3 * i + 2) += trap.k_perp * (r.z() - g.trap_z_center[i]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Eigen::Vector3d gv = pair_vdd_grad(g, g.pair_delta(i, j));
      grad.segment<3>(3 * i) += gv;
      grad.segment<3>(3 * j) -= gv;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a)
      if (g.frozen[i][a]) grad(3 * i + a) = 0.0;
  return grad;
}

Eigen::MatrixXd potential_hessian(const Geometry& g, const TrapSpec& trap) {
  const int n = g.n();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (int i = 0; i < n; ++i) {
    h(3 * i + 0, 3 * i + 0) += trap.k_long;
    h(3 * i + 1, 3 * i + 1) += trap.k_perp;
    h(3 * i + 2, 3 * i + 2) += trap.k_perp;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Eigen::Matrix3d k = pair_vdd_hessian(g, g.pair_delta(i, j));
      h.block<3, 3>(3 * i, 3 * i) += k;
      h.block<3, 3>(3 * j, 3 * j) += k;
      h.block<3, 3>(3 * i, 3 * j) -= k;
      h.block<3, 3>(3 * j, 3 * i) -= k;
    }
  }
  return h;
}

namespace {

struct FreeMap {
  std::vector<int> coords;  // free slot -> 3N coordinate index
  Eigen::VectorXd gather(const Eigen::VectorXd& full) const {
    Eigen::VectorXd v(coords.size());
    for (size_t k = 0; k < coords.size(); ++k) v(k) = full(coords[k]);
    return v;
  }
  Eigen::MatrixXd gather(const Eigen::MatrixXd& full) const {
    const int m = int(coords.size());
    Eigen::MatrixXd h(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) h(a, b) = full(coords[a], coords[b]);
    return h;
  }
  void scatter_add(Geometry& g, const Eigen::VectorXd& step, double scale) const {
    for (size_t k = 0; k < coords.size(); ++k) {
      const int c = coords[k];
      g.positions[c / 3](c % 3) += scale * step(k);
    }
  }
};

FreeMap free_map(const Geometry& g, int gauge_site) {
  FreeMap fm;
  for (int i = 0; i < g.n(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (g.frozen[i][a]) continue;
      if (i == gauge_site && a == 0) continue;
      fm.coords.push_back(3 * i + a);
    }
  }
  return fm;
}

}  // namespace

EquilibriumResult minimize_equilibrium(Geometry g, const TrapSpec& trap,
                                       const MinimizeOptions& opt) {
  g.validate();
  check_collapse(g, 1e-6);

  // Periodic chains without a longitudinal trap have a free x translation;
  // gauge-fix it at the target site (or site 0).
  int gauge_site = -1;
  if (g.boundary == Boundary::periodic && trap.k_long == 0.0)
    gauge_site = g.marker_site >= 0 ? g.marker_site : 0;
  const FreeMap fm = free_map(g, gauge_site);
  const int m = int(fm.coords.size());
  if (m == 0) throw std::invalid_argument("no free coordinates to minimize");

  auto grad_free = [&](const Geometry& gg) {
    return fm.gather(total_gradient(gg, trap));
  };

  double energy = total_energy(g, trap);
  Eigen::VectorXd grad = grad_free(g);
  int iter = 0;

  // L-BFGS phase down to a loose tolerance, Newton polish afterwards.
  const double newton_switch = 1e-4;
  const int history = 12;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  auto lbfgs_direction = [&](const Eigen::VectorXd& gr) {
    Eigen::VectorXd q = -gr;
    const int h = int(s_hist.size());
    std::vector<double> alpha(h);
    for (int k = h - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (h > 0) {
      const double gamma =
          s_hist[h - 1].dot(y_hist[h - 1]) / y_hist[h - 1].squaredNorm();
      q *= gamma;
    }
    for (int k = 0; k < h; ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    return q;
  };

  while (grad.lpNorm<Eigen::Infinity>() > newton_switch) {
    if (iter >= opt.max_iter)
      throw ConvergenceError("minimize_equilibrium: iteration limit in descent phase");
    Eigen::VectorXd dir = lbfgs_direction(grad);
    if (dir.dot(grad) >= 0.0) dir = -grad;  // safeguard
    const double dir_max = dir.lpNorm<Eigen::Infinity>();
    if (dir_max > opt.max_step) dir *= opt.max_step / dir_max;

    double step = 1.0;
    const double g_dot_d = grad.dot(dir);
    Geometry trial = g;
    double new_energy = energy;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      trial = g;
      fm.scatter_add(trial, dir, step);
      new_energy = total_energy(trial, trap);
      if (new_energy <= energy + 1e-4 * step * g_dot_d) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError("minimize_equilibrium: line search failed");
    check_collapse(trial, opt.collapse_distance);

    Eigen::VectorXd new_grad = grad_free(trial);
    Eigen::VectorXd s = step * dir;
    Eigen::VectorXd y = new_grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (int(s_hist.size()) > history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    g = std::move(trial);
    energy = new_energy;
    grad = std::move(new_grad);
    ++iter;
  }

  // Newton polish with the analytic Hessian.
  while (grad.lpNorm<Eigen::Infinity>() > opt.tol) {
    if (iter >= opt.max_iter)
      throw ConvergenceError("minimize_equilibrium: iteration limit in Newton phase");
    Eigen::MatrixXd h = fm.gather(potential_hessian(g, trap));
    Eigen::VectorXd step;
    double damping = 0.0;
    for (int attempt = 0; attempt < 50; ++attempt) {
      Eigen::MatrixXd hd = h;
      if (damping > 0.0)
        hd += damping * Eigen::MatrixXd::Identity(m, m);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hd);
      if (ldlt.info() == Eigen::Success) {
        step = ldlt.solve(-grad);
        if (step.allFinite() && step.dot(grad) < 0.0) break;
      }
      damping = damping == 0.0 ? 1e-8 : damping * 10.0;
      step.resize(0);
    }
    if (step.size() == 0)
      throw ConvergenceError("minimize_equilibrium: Hessian solve failed");
    const double step_max = step.lpNorm<Eigen::Infinity>();
    if (step_max > opt.max_step) step *= opt.max_step / step_max;

    Geometry trial = g;
    fm.scatter_add(trial, step, 1.0);
    double new_energy = total_energy(trial, trap);
    double scale = 1.0;
    while (new_energy > energy + 1e-12 * std::abs(energy) && scale > 1e-8) {
      scale *= 0.5;
      trial = g;
      fm.scatter_add(trial, step, scale);
      new_energy = total_energy(trial, trap);
    }
    check_collapse(trial, opt.collapse_distance);
    g = std::move(trial);
    energy = new_energy;
    grad = grad_free(g);
    ++iter;
  }

  g.fold();
  EquilibriumResult res;
  res.energy = total_energy(g, trap);
  // Report the gradient over the geometry's own free coordinates (the gauge
  // coordinate is force-free at a periodic equilibrium).
  res.gradient_norm =
      total_gradient(g, trap).lpNorm<Eigen::Infinity>();
  res.iterations = iter;

  if (opt.stability_check) {
    const FreeMap all = free_map(g, -1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        all.gather(potential_hessian(g, trap)), Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -1e-8) {
      std::ostringstream os;
      os << "equilibrium unstable: Hessian eigenvalue " << min_eig
         << " < 0 (perpendicular stability limit)";
      throw StabilityError(os.str());
    }
  }
  res.geometry = std::move(g);
  return res;
}

Geometry two_molecule_geometry(double initial_spacing) {
  Geometry g;
  g.boundary = Boundary::harmonic;
  g.positions = {{-0.5 * initial_spacing, 0.0, 0.0},
                 {0.5 * initial_spacing, 0.0, 0.0}};
  g.layers = {Layer::crystal, Layer::crystal};
  g.frozen = {{false, false, false}, {false, false, false}};
  g.trap_z_center = {0.0, 0.0};
  return g;
}

Geometry chain_geometry(int n, Boundary boundary) {
  if (n < 2) throw std::invalid_argument("chain needs n >= 2");
  Geometry g;
  g.boundary = boundary;
  const double offset = boundary == Boundary::periodic ? 0.0 : -0.5 * (n - 1);
  for (int i = 0; i < n; ++i) {
    g.positions.push_back({offset + double(i), 0.0, 0.0});
    g.layers.push_back(Layer::crystal);
    g.frozen.push_back({false, false, false});
    g.trap_z_center.push_back(0.0);
  }
  if (boundary == Boundary::periodic) g.box_length = double(n);
  return g;
}

Geometry lattice_with_marker(int n, double b_over_a, int marker_site,
                             Boundary boundary) {
  if (n < 3) throw std::invalid_argument("marker scenarios need n >= 3");
  if (marker_site < 0 || marker_site >= n)
    throw std::invalid_argument("marker_site out of range");
  if (!(b_over_a > 0.0)) throw std::invalid_argument("b_over_a must be > 0");
  Geometry g = chain_geometry(n, boundary);
  g.positions.push_back(
      {g.positions[marker_site].x(), 0.0, b_over_a});
  g.layers.push_back(Layer::marker);
  g.frozen.push_back({false, false, true});  // hard bilayer constraint in z
  g.trap_z_center.push_back(b_over_a);
  g.marker_site = marker_site;
  return g;
}

std::string geometry_csv(const Geometry& g) {
  std::ostringstream os;
  os << "index,layer,x,y,z\n";
  for (int i = 0; i < g.n(); ++i) {
    os << i << ',' << (g.layers[i] == Layer::marker ? "marker" : "crystal")
       << ',' << csv_num(g.positions[i].x()) << ',' << csv_num(g.positions[i].y())
       << ',' << csv_num(g.positions[i].z()) << '\n';
  }
  return os.str();
}

}  // namespace dipsim
