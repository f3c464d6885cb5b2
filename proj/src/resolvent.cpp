// SPDX-License-Identifier: Apache-2.0
#include "nsa/resolvent.hpp"

#include <Eigen/SparseLU>

#include <cmath>

#include "nsa/fit.hpp"

namespace nsa {

namespace {
constexpr double kPi = std::numbers::pi;
const cd kI(0.0, 1.0);

double node_distance(const Grid& g, int i, int j) {
  return (g.nodes.row(i) - g.nodes.row(j)).norm();
}

// (e^{i a d} - e^{i b d}) / (4 pi d) without cancellation; d = 0 gives i(a - b)/(4 pi)
cd diff3d(double a, double b, double d) {
  if (d == 0.0) return kI * (a - b) / (4.0 * kPi);
  const double th = (a - b) * d;
  // e^{i th} - 1 = 2i sin(th/2) e^{i th/2}
  const cd em1 = 2.0 * kI * std::sin(0.5 * th) * std::exp(kI * (0.5 * th));
  return std::exp(kI * (b * d)) * em1 / (4.0 * kPi * d);
}
}  // namespace

cd free_kernel_3d(const ResolventSpec& spec, double d) {
  if (!(d > 0.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "free_kernel_3d requires d > 0");
  return std::exp(kI * (branch_sign(spec.sign) * spec.lambda * d)) / (4.0 * kPi * d);
}

cd free_kernel_radial(const ResolventSpec& spec, double r, double rp) {
  if (!(r > 0.0) || !(rp > 0.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "radii must be positive");
  const double rl = std::min(r, rp), rg = std::max(r, rp);
  const double lam = spec.lambda;
  if (lam == 0.0) return rl;
  return std::sin(lam * rl) * std::exp(kI * (branch_sign(spec.sign) * lam * rg)) / lam;
}

double cube_mean_inverse_distance() {
  const double s3 = std::sqrt(3.0);
  return 3.0 * std::log((s3 + 1.0) / (s3 - 1.0)) - kPi / 2.0;
}

DenseOperator build_R0(GridPtr grid, const ResolventSpec& spec, Exec exec) {
  const Grid& g = *grid;
  const int n = g.size();
  CMat K;
  if (g.mode == GridMode::RADIAL_SWAVE) {
    K = assemble(n, n, [&](int i, int j) { return free_kernel_radial(spec, g.r(i), g.r(j)); }, exec);
  } else {
    const double s = branch_sign(spec.sign);
    const cd diag = cube_mean_inverse_distance() / (g.h * 4.0 * kPi) + kI * (s * spec.lambda) / (4.0 * kPi);
    K = assemble(
        n, n,
        [&](int i, int j) { return i == j ? diag : free_kernel_3d(spec, node_distance(g, i, j)); }, exec);
  }
  return DenseOperator(std::move(grid), std::move(K), OpKind::KERNEL);
}

DenseOperator build_B(GridPtr grid, double lambda0, double lambda, Branch sign, Exec exec) {
  const Grid& g = *grid;
  const int n = g.size();
  const double s = branch_sign(sign);
  CMat K;
  if (g.mode == GridMode::RADIAL_SWAVE) {
    const ResolventSpec a{lambda, sign}, b{lambda0, sign};
    K = assemble(
        n, n,
        [&](int i, int j) {
          if (lambda == lambda0) return cd(0.0);
          return free_kernel_radial(a, g.r(i), g.r(j)) - free_kernel_radial(b, g.r(i), g.r(j));
        },
        exec);
  } else {
    K = assemble(n, n, [&](int i, int j) { return diff3d(s * lambda, s * lambda0, node_distance(g, i, j)); }, exec);
  }
  return DenseOperator(std::move(grid), std::move(K), OpKind::KERNEL);
}

KernelDiffReport kernel_difference_check(GridPtr grid, const GridFunction& V, const std::vector<double>& lambdas,
                                         double mu, double p) {
  if (lambdas.size() < 4) throw Error(ErrorCode::INVALID_ARGUMENT, "need at least 4 lambda values to fit");
  if (!(p >= 1.0 && p < 1.5)) throw Error(ErrorCode::INVALID_ARGUMENT, "p must lie in [1, 3/2)");
  check_same_grid(grid, V.grid);
  KernelDiffReport rep;
  rep.mu = mu;
  rep.p = p;
  rep.p_prime = p / (p - 1.0);
  rep.expected = 1.0 - 3.0 / rep.p_prime;
  const Grid& g = *grid;
  // column at the node closest to the origin
  int c = 0;
  for (int i = 1; i < g.size(); ++i)
    if (g.nodes.row(i).norm() < g.nodes.row(c).norm()) c = i;
  std::vector<double> xs, ys;
  for (double lam : lambdas) {
    if (lam == mu) throw Error(ErrorCode::INVALID_ARGUMENT, "lambda equals mu: exponent undefined");
    CVec col(g.size());
    for (int i = 0; i < g.size(); ++i) {
      const double d = g.mode == GridMode::RADIAL_SWAVE ? g.r(i) : node_distance(g, i, c);
      col(i) = diff3d(lam, mu, d);
    }
    const double nrm = lp_norm(GridFunction(grid, col), rep.p_prime, WeightSet::VOLUME);
    const CMat VB = V.values.asDiagonal() * build_B(grid, mu, lam, Branch::PLUS).effective();
    rep.lambdas.push_back(lam);
    rep.column_norms.push_back(nrm);
    rep.vb_norms.push_back(l1_norm_matrix(g, VB));
    xs.push_back(std::log(std::abs(lam - mu)));
    ys.push_back(std::log(nrm));
  }
  rep.exponent = linear_fit(xs, ys).slope;
  rep.ok = rep.exponent >= rep.expected - 0.15;
  return rep;
}

double resolvent_identity_residual(GridPtr grid, double lambda) {
  if (lambda == 0.0) return 0.0;
  const Grid& g = *grid;
  const CMat Rl = build_R0(grid, {lambda, Branch::PLUS}).effective();
  const CMat R0 = build_R0(grid, {0.0, Branch::PLUS}).effective();
  const double l2 = lambda * lambda;
  CMat comp = Rl * R0;
  if (g.mode == GridMode::RADIAL_SWAVE) {
    const int n = g.size();
    const cd ph = kI * std::exp(kI * (lambda * g.L)) / l2;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) comp(i, j) += g.h * g.r(j) * std::sin(lambda * g.r(i)) * ph;
  }
  const CMat res = Rl - R0 - l2 * comp;
  return l1_norm_matrix(g, res);
}

RMat laplacian(const Grid& g) {
  const int n = g.size();
  const double ih2 = 1.0 / (g.h * g.h);
  RMat A = RMat::Zero(n, n);
  if (g.mode == GridMode::RADIAL_SWAVE) {
    for (int i = 0; i < n; ++i) {
      A(i, i) = 2.0 * ih2;
      if (i > 0) A(i, i - 1) = -ih2;
      if (i + 1 < n) A(i, i + 1) = -ih2;
    }
    A(0, 0) += ih2;          // odd reflection at r = 0
    A(n - 1, n - 1) -= ih2;  // Neumann closure at r = L
  } else {
    const int N = g.n_side;
    auto id = [N](int a, int b, int c) { return (a * N + b) * N + c; };
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < N; ++c) {
          const int i = id(a, b, c);
          A(i, i) = 6.0 * ih2;
          if (a > 0) A(i, id(a - 1, b, c)) = -ih2;
          if (a + 1 < N) A(i, id(a + 1, b, c)) = -ih2;
          if (b > 0) A(i, id(a, b - 1, c)) = -ih2;
          if (b + 1 < N) A(i, id(a, b + 1, c)) = -ih2;
          if (c > 0) A(i, id(a, b, c - 1)) = -ih2;
          if (c + 1 < N) A(i, id(a, b, c + 1)) = -ih2;
        }
  }
  return A;
}

cd lattice_energy(double lambda, Branch sign, double phi) {
  const double sg = lambda > 0.0 ? 1.0 : (lambda < 0.0 ? -1.0 : 0.0);
  const cd z = lambda * lambda * std::exp(kI * (phi * sg));
  return sign == Branch::PLUS ? z : std::conj(z);
}

CMat lattice_R0_matrix(const Grid& g, cd z) {
  CMat Az = laplacian(g).cast<cd>();
  Az.diagonal().array() -= z;
  return Eigen::PartialPivLU<CMat>(Az).inverse();
}

CMat lattice_solve(const Grid& g, cd z, const CMat& rhs, const CVec& d) {
  const int n = g.size();
  Eigen::SparseMatrix<cd> S = laplacian(g).cast<cd>().sparseView();
  for (int i = 0; i < n; ++i) S.coeffRef(i, i) += (d.size() ? d(i) : cd(0.0)) - z;
  S.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<cd>> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::NEAR_SINGULAR, "lattice factorization failed");
  return lu.solve(rhs);
}

DenseOperator lattice_R0(GridPtr grid, double lambda, Branch sign, double phi) {
  CMat R = lattice_R0_matrix(*grid, lattice_energy(lambda, sign, phi));
  return DenseOperator(std::move(grid), std::move(R), OpKind::MATRIX);
}

CMat R0_effective(GridPtr grid, double lambda, Branch sign, const ResolventModel& model) {
  if (model.kind == ModelKind::QUADRATURE) return build_R0(grid, {lambda, sign}).effective();
  return lattice_R0_matrix(*grid, lattice_energy(lambda, sign, model.phi));
}

CMat B_effective(GridPtr grid, double lambda0, double lambda, Branch sign, const ResolventModel& model) {
  if (model.kind == ModelKind::QUADRATURE) return build_B(grid, lambda0, lambda, sign).effective();
  if (lambda == lambda0) return CMat::Zero(grid->size(), grid->size());
  return R0_effective(grid, lambda, sign, model) - R0_effective(grid, lambda0, sign, model);
}

}  // namespace nsa
