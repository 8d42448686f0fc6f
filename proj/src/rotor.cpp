#include "dipsim/rotor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dipsim {

double cos_theta_element(int n, int abs_m) {
  if (n < 0 || abs_m < 0 || abs_m > n) throw std::invalid_argument("bad (N, M)");
  const double num = double(n + 1) * double(n + 1) - double(abs_m) * double(abs_m);
  const double den = double(2 * n + 1) * double(2 * n + 3);
  return std::sqrt(num / den);
}

namespace {

// H block at fixed |M|: basis N = m .. n_max, tridiagonal.
Eigen::MatrixXd block_hamiltonian(double x, int abs_m, int n_max) {
  const int dim = n_max - abs_m + 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const int n = abs_m + i;
    h(i, i) = double(n) * double(n + 1);
    if (i + 1 < dim) {
      const double c = -x * cos_theta_element(n, abs_m);
      h(i, i + 1) = c;
      h(i + 1, i) = c;
    }
  }
  return h;
}

struct BlockSolution {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;
};

BlockSolution solve_block(double x, int abs_m, int n_max) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block_hamiltonian(x, abs_m, n_max));
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

std::vector<StarkLevel> stark_spectrum_scaled(double x, const StarkOptions& opt) {
  if (opt.n_max < 4) throw std::invalid_argument("n_max must be >= 4");
  if (x < 0.0) throw std::invalid_argument("bias field must be >= 0");
  if (opt.max_label_n > opt.n_max - 2)
    throw std::invalid_argument("max_label_n too close to the basis cutoff");

  std::vector<StarkLevel> out;
  for (int abs_m = 0; abs_m <= opt.max_label_n; ++abs_m) {
    // Adiabatic continuation from x = 0 where level i has N = abs_m + i.
    const int dim = opt.n_max - abs_m + 1;
    std::vector<int> label(dim);  // eigenvalue slot -> N label
    for (int i = 0; i < dim; ++i) label[i] = abs_m + i;

    BlockSolution prev = solve_block(0.0, abs_m, opt.n_max);
    const int nsteps = std::max(1, int(std::ceil(x / opt.label_step)));
    for (int s = 1; s <= nsteps; ++s) {
      const double xs = x * double(s) / double(nsteps);
      BlockSolution cur = solve_block(xs, abs_m, opt.n_max);
      // Greedy overlap assignment; refine the step if continuation is ambiguous.
      std::vector<int> map(dim, -1);
      std::vector<bool> used(dim, false);
      bool ok = true;
      for (int i = 0; i < dim; ++i) {
        int best = -1;
        double best_ov = -1.0;
        for (int j = 0; j < dim; ++j) {
          if (used[j]) continue;
          const double ov = std::abs(prev.vectors.col(i).dot(cur.vectors.col(j)));
          if (ov > best_ov) {
            best_ov = ov;
            best = j;
          }
        }
        if (best_ov < 0.9) ok = false;
        map[i] = best;
        used[best] = true;
      }
      if (!ok) {
        StarkOptions finer = opt;
        finer.label_step = opt.label_step / 2.0;
        if (finer.label_step < 1e-6)
          throw std::runtime_error("adiabatic labeling failed to converge");
        return stark_spectrum_scaled(x, finer);
      }
      std::vector<int> new_label(dim);
      for (int i = 0; i < dim; ++i) new_label[map[i]] = label[i];
      label = std::move(new_label);
      prev = std::move(cur);
    }

    for (int slot = 0; slot < dim; ++slot) {
      if (label[slot] > opt.max_label_n) continue;
      StarkLevel lvl;
      lvl.label_n = label[slot];
      lvl.label_abs_m = abs_m;
      lvl.energy = prev.energies(slot);
      lvl.amplitudes = prev.vectors.col(slot);
      // tail population in the top two N shells
      double tail = 0.0;
      for (int i = std::max(0, dim - 2); i < dim; ++i)
        tail += lvl.amplitudes(i) * lvl.amplitudes(i);
      if (tail > opt.tail_tol)
        throw std::runtime_error(
            "stark_spectrum: basis cutoff too small (tail population " +
            std::to_string(tail) + ")");
      // Hellmann-Feynman: -dE/dE_b = mu_b <cos theta>
      double ct = 0.0;
      for (int i = 0; i + 1 < dim; ++i)
        ct += 2.0 * lvl.amplitudes(i) * lvl.amplitudes(i + 1) *
              cos_theta_element(abs_m + i, abs_m);
      lvl.induced_dipole = ct;
      out.push_back(std::move(lvl));
    }
  }
  std::sort(out.begin(), out.end(), [](const StarkLevel& a, const StarkLevel& b) {
    if (a.label_n != b.label_n) return a.label_n < b.label_n;
    return a.label_abs_m < b.label_abs_m;
  });
  return out;
}

std::vector<StarkLevel> stark_spectrum(double rotational_b, double mu_b,
                                       double e_bias, const StarkOptions& opt) {
  if (!(rotational_b > 0.0) || !(mu_b > 0.0))
    throw std::invalid_argument("B and mu_b must be > 0");
  return stark_spectrum_scaled(mu_b * e_bias / rotational_b, opt);
}

}  // namespace dipsim
