// SPDX-License-Identifier: Apache-2.0
#include "nsa/kernels.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace nsa {

namespace {
Exec g_exec = Exec::PARALLEL;
}

void set_default_exec(Exec e) { g_exec = e; }
Exec default_exec() { return g_exec; }

CMat assemble(int rows, int cols, const EntryFn& fn, Exec exec) {
  CMat M(rows, cols);
  if (exec == Exec::PARALLEL) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) M(i, j) = fn(i, j);
  } else {
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) M(i, j) = fn(i, j);
  }
  return M;
}

double weighted_l1_max(const CMat& E, const RVec& w, Exec exec) {
  const int n = static_cast<int>(E.cols());
  std::vector<double> col(n, 0.0);
  auto one = [&](int j) {
    double s = 0.0;
    for (int i = 0; i < E.rows(); ++i) s += w(i) * std::abs(E(i, j));
    col[j] = s / w(j);
  };
  if (exec == Exec::PARALLEL) {
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j) one(j);
  } else {
    for (int j = 0; j < n; ++j) one(j);
  }
  double m = 0.0;
  for (double c : col) m = std::max(m, c);
  return m;
}

CMat dft_rows(const CMat& G, double lam0, double step, Exec exec) {
  const int nx = static_cast<int>(G.rows());
  const int n = static_cast<int>(G.cols());
  const double drho = 2.0 * std::numbers::pi / (n * step);
  CMat out(nx, n);
  auto row = [&](Eigen::FFT<double>& fft, int x) {
    std::vector<cd> in(n), spec;
    for (int m = 0; m < n; ++m) in[m] = G(x, m);
    fft.fwd(spec, in);
    for (int q = -n / 2; q < n / 2; ++q) {
      const int k = (q + n) % n;
      const double rho = q * drho;
      out(x, q + n / 2) = step * std::exp(cd(0.0, -rho * lam0)) * spec[k];
    }
  };
  if (exec == Exec::PARALLEL) {
#pragma omp parallel
    {
      Eigen::FFT<double> fft;
#pragma omp for schedule(static)
      for (int x = 0; x < nx; ++x) row(fft, x);
    }
  } else {
    Eigen::FFT<double> fft;
    for (int x = 0; x < nx; ++x) row(fft, x);
  }
  return out;
}

}  // namespace nsa
