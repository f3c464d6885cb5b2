// SPDX-License-Identifier: Apache-2.0
#include "nsa/threshold_jordan.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace nsa {

namespace {

const cd kI(0.0, 1.0);

// orthonormal basis of range(X), singular values above tol * sigma_max (or tol if absolute)
CMat orth(const CMat& X, double tol, bool absolute = false) {
  if (X.cols() == 0 || X.rows() == 0) return CMat(X.rows(), 0);
  Eigen::BDCSVD<CMat> svd(X, Eigen::ComputeThinU);
  const RVec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return CMat(X.rows(), 0);
  const double cut = absolute ? tol : tol * s(0);
  int r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return svd.matrixU().leftCols(r);
}

// right null space: singular values <= abs_tol
CMat null_space(const CMat& A, double abs_tol) {
  const int n = static_cast<int>(A.cols());
  if (A.rows() == 0) return CMat::Identity(n, n);
  Eigen::BDCSVD<CMat> svd(A, Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  int r = 0;
  while (r < s.size() && s(r) > abs_tol) ++r;
  return svd.matrixV().rightCols(n - r);
}

// ker N^k for k = 1, 2, ... via ker N^k = {x : (I - Z Z^H) N x = 0}, Z = ker N^{k-1}
std::vector<CMat> staircase(const CMat& Nn, double tol, int kmax) {
  const int n = static_cast<int>(Nn.rows());
  std::vector<CMat> Z;
  CMat prev(n, 0);
  for (int k = 1; k <= kmax; ++k) {
    const CMat Pc = CMat::Identity(n, n) - prev * prev.adjoint();
    CMat z = null_space(Pc * Nn, tol);
    Z.push_back(z);
    if (z.cols() == n || (k > 1 && z.cols() == prev.cols())) break;
    prev = z;
  }
  return Z;
}

// smallest-|z| root of a z^2 + 2 b z + c = 1, ties -> nonnegative real part
cd pick_root(cd a, cd b, cd c, double tiny) {
  if (std::abs(a) <= tiny) return (1.0 - c) / (2.0 * b);
  const cd disc = std::sqrt(b * b - a * (c - 1.0));
  const cd z1 = (-b + disc) / a, z2 = (-b - disc) / a;
  const double d = std::abs(z1) - std::abs(z2);
  if (std::abs(d) <= 1e-12 * std::max(1.0, std::abs(z1))) return z1.real() >= 0.0 ? z1 : z2;
  return d < 0.0 ? z1 : z2;
}

}  // namespace

int JordanBasis::dim() const {
  int d = 0;
  for (const auto& c : chains) d += c.k;
  return d;
}

CMat JordanBasis::stacked() const {
  if (chains.empty()) return CMat(grid ? grid->size() : form.rows(), 0);
  const int n = static_cast<int>(chains.front().psi.front().size());
  CMat S(n, dim());
  int col = 0;
  for (const auto& c : chains)
    for (const auto& v : c.psi) S.col(col++) = v;
  return S;
}

cd JordanBasis::pair(const CVec& u, const CVec& v) const {
  if (grid) return bpair(*grid, u, v);
  return (u.transpose() * (form * v))(0, 0);
}

CMat pairing_pattern(const JordanBasis& b) {
  const int d = b.dim();
  CMat P = CMat::Zero(d, d);
  int off = 0;
  for (const auto& c : b.chains) {
    for (int j = 1; j <= c.k; ++j) P(off + j - 1, off + c.k - j) = 1.0;
    off += c.k;
  }
  return P;
}

BasisCertificate certify(const JordanBasis& b, const CMat& N, int space_dim) {
  BasisCertificate cert;
  cert.dim_expected = space_dim;
  cert.dim_found = b.dim();
  double scale = 1.0;
  for (const auto& c : b.chains)
    for (const auto& v : c.psi) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  for (const auto& c : b.chains)
    for (int j = 1; j <= c.k; ++j) {
      CVec r = N * c.psi[j - 1];
      if (j > 1) r -= c.psi[j - 2];
      cert.chain_residual = std::max(cert.chain_residual, r.cwiseAbs().maxCoeff() / scale);
    }
  const CMat P = pairing_pattern(b);
  if (b.gram.size()) cert.pairing_error = (b.gram - P).cwiseAbs().maxCoeff();
  // j1 + j2 <= max(k1, k2) block
  int o1 = 0;
  for (const auto& c1 : b.chains) {
    int o2 = 0;
    for (const auto& c2 : b.chains) {
      for (int j1 = 1; j1 <= c1.k; ++j1)
        for (int j2 = 1; j2 <= c2.k; ++j2)
          if (j1 + j2 <= std::max(c1.k, c2.k))
            cert.prop54_error = std::max(cert.prop54_error, std::abs(b.gram(o1 + j1 - 1, o2 + j2 - 1)));
      o2 += c2.k;
    }
    o1 += c1.k;
  }
  return cert;
}

JordanBasis jordan_dual_basis(const CMat& N, const CMat& G, const JordanOptions& opt) {
  const int n = static_cast<int>(N.rows());
  JordanBasis out;
  out.form = G;
  if (n == 0) return out;
  const double nN = N.norm();
  if ((G * N - N.transpose() * G).norm() > opt.tol_sym * std::max(1.0, G.norm() * nN))
    throw Error(ErrorCode::NOT_SYMMETRIC, "N is not symmetric with respect to the bilinear form");
  const double scale = opt.scale > 0.0 ? opt.scale : std::max(1.0, N.operatorNorm());
  const CMat Nn = N / scale;

  // (i) staircase X_k = ker N^k
  std::vector<CMat> Z = staircase(Nn, opt.tol_rank, n);
  if (Z.back().cols() != n) throw Error(ErrorCode::NOT_NILPOTENT, "ker N^k does not exhaust the space");
  const int K = static_cast<int>(Z.size());
  out.K = K;
  out.L.assign(K, 0);
  auto Zk = [&](int k) -> CMat {
    if (k <= 0) return CMat(n, 0);
    if (k > K) return Z[K - 1];
    return Z[k - 1];
  };

  // (ii) complements X_{k,k} of X_{k-1} + N X_{k+1} inside X_k, top-down
  std::vector<CMat> comp(K + 1);
  for (int k = K; k >= 1; --k) {
    const CMat lower = Zk(k - 1), up = Nn * Zk(k + 1);
    CMat W(n, lower.cols() + up.cols());
    W << lower, up;
    const CMat QW = orth(W, 1e-6, true);
    const CMat Xk = Zk(k);
    const int Lk = static_cast<int>(Xk.cols() - QW.cols());
    if (Lk < 0) throw Error(ErrorCode::NOT_NILPOTENT, "inconsistent staircase");
    out.L[k - 1] = Lk;
    if (Lk == 0) continue;
    const CMat P = Xk - QW * (QW.adjoint() * Xk);
    Eigen::BDCSVD<CMat> svd(P, Eigen::ComputeThinU);
    comp[k] = svd.matrixU().leftCols(Lk);
  }

  std::vector<CMat> Npow(K + 1);
  Npow[0] = CMat::Identity(n, n);
  for (int p = 1; p <= K; ++p) Npow[p] = N * Npow[p - 1];
  auto Q = [&](const CVec& x, const CVec& y, int k) -> cd {
    return (x.transpose() * (G * (Npow[k - 1] * y)))(0, 0);
  };

  for (int k = 1; k <= K; ++k) {
    const int Lk = out.L[k - 1];
    if (Lk == 0) continue;
    CMat Psi = comp[k];

    // (iii-a) orthogonality against finished lower levels; a second pass restores
    // what cancellation loses when the basis is badly conditioned
    for (int c = 0; c < Psi.cols(); ++c) {
      CVec psi = Psi.col(c);
      for (int pass = 0; pass < 2; ++pass) {
        const CVec psi0 = psi;
        for (const auto& ch : out.chains)
          for (int j = 1; j <= ch.k; ++j) {
            const cd coef = (psi0.transpose() * (G * ch.psi[j - 1]))(0, 0);
            psi -= coef * ch.psi[ch.k - j];
          }
      }
      Psi.col(c) = psi;
    }

    // (iii-b) same-level half corrections, j2 = 2..k
    if (k >= 2) {
      const CMat D = Psi.transpose() * G * Npow[k - 1] * Psi;
      Eigen::FullPivLU<CMat> Dlu(D);
      if (Dlu.rank() < Lk) throw Error(ErrorCode::DEGENERATE_PAIRING, "top-level pairing matrix singular");
      // the second sweep is a no-op in exact arithmetic and removes round-off amplified by |N|
      for (int sweep = 0; sweep < 2; ++sweep)
        for (int j2 = 2; j2 <= k; ++j2) {
          const CMat Gj = Psi.transpose() * G * Npow[k - j2] * Psi;
          Psi = Psi - 0.5 * (Npow[j2 - 1] * Psi) * Dlu.solve(Gj);
        }
    }

    // (iv) self-dual basis for Q(x, y) = B(N^{k-1} x, y). With distinct singular values the
    // Takagi factor D = U diag(s e^{it}) U^T gives W = conj(U) diag((s e^{it})^{-1/2}), W^T D W = I,
    // the best conditioned choice; otherwise fall back to pairwise elimination.
    {
      const CMat D = Psi.transpose() * G * Npow[k - 1] * Psi;
      Eigen::JacobiSVD<CMat> svd(D, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const RVec& sv = svd.singularValues();
      const CMat Z = svd.matrixU().adjoint() * svd.matrixV().conjugate();
      bool distinct = sv(Lk - 1) > opt.tol_rank * std::max(1e-300, sv(0));
      for (int a = 1; a < Lk && distinct; ++a) distinct = sv(a - 1) - sv(a) > 1e-6 * sv(0);
      const double offdiag = (Z - CMat(Z.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
      if (distinct && offdiag <= 1e-8) {
        CVec d(Lk);
        // D = U diag(s z) U^T since conj(V) = U Z
        for (int a = 0; a < Lk; ++a) d(a) = 1.0 / std::sqrt(sv(a) * Z(a, a));
        const CMat W = svd.matrixU().conjugate() * d.asDiagonal();
        const CMat top = Psi * W;
        for (int c = 0; c < Lk; ++c) {
          Chain ch;
          ch.k = k;
          ch.psi.resize(k);
          ch.psi[k - 1] = top.col(c);
          for (int j = k - 1; j >= 1; --j) ch.psi[j - 1] = N * ch.psi[j];
          out.chains.push_back(std::move(ch));
        }
        continue;
      }
    }
    std::vector<CVec> work;
    for (int c = 0; c < Psi.cols(); ++c) work.push_back(Psi.col(c));
    const double qscale = (G * Npow[k - 1]).norm();
    while (!work.empty()) {
      const CVec psi = work.front();
      int best = 0;
      double bestv = -1.0;
      for (std::size_t m = 0; m < work.size(); ++m) {
        const double v = std::abs(Q(psi, work[m], k)) / std::max(1e-300, work[m].norm());
        if (v > bestv) {
          bestv = v;
          best = static_cast<int>(m);
        }
      }
      const double tiny = opt.tol_rank * qscale * psi.norm() * psi.norm();
      if (bestv * psi.norm() <= tiny)
        throw Error(ErrorCode::DEGENERATE_PAIRING, "no partner with nonzero pairing in the level");
      CVec nv;
      int drop = 0;
      if (best == 0) {
        const cd a = Q(psi, psi, k);
        // (z + 1)^2 a = 1
        const cd s = 1.0 / std::sqrt(a);
        const cd z1 = -1.0 + s, z2 = -1.0 - s;
        const cd z = std::abs(z1) <= std::abs(z2) ? z1 : z2;
        nv = (z + 1.0) * psi;
      } else {
        const CVec& phi = work[best];
        const cd z = pick_root(Q(psi, psi, k), Q(psi, phi, k), Q(phi, phi, k), tiny);
        nv = z * psi + phi;
        drop = std::abs(z) > 1e-14 ? 0 : best;
      }
      work.erase(work.begin() + drop);
      for (auto& w : work) w -= Q(w, nv, k) * nv;
      Chain ch;
      ch.k = k;
      ch.psi.resize(k);
      ch.psi[k - 1] = nv;
      for (int j = k - 1; j >= 1; --j) ch.psi[j - 1] = N * ch.psi[j];
      out.chains.push_back(std::move(ch));
    }
  }
  const CMat S = out.stacked();
  out.gram = S.transpose() * G * S;
  return out;
}

JordanBasis jordan_dual_basis(const DenseOperator& N, const JordanOptions& opt) {
  const CMat G = N.grid->flat_w.cast<cd>().asDiagonal();
  JordanBasis b = jordan_dual_basis(N.effective(), G, opt);
  b.grid = N.grid;
  b.form.resize(0, 0);
  return b;
}

CMat make_symmetric_nilpotent(const std::vector<int>& blocks, std::mt19937_64& rng, double mix) {
  int n = 0;
  for (int b : blocks) n += b;
  CMat J = CMat::Zero(n, n), F = CMat::Zero(n, n), Finv = CMat::Zero(n, n);
  int off = 0;
  for (int b : blocks) {
    CMat E = CMat::Zero(b, b);
    for (int i = 0; i < b; ++i) E(i, b - 1 - i) = 1.0;
    const CMat Fb = (CMat::Identity(b, b) + kI * E) / cd(1.0, 1.0);  // Fb^2 = E
    F.block(off, off, b, b) = Fb;
    Finv.block(off, off, b, b) = Fb * E;
    for (int i = 0; i + 1 < b; ++i) J(off + i, off + i + 1) = 1.0;
    off += b;
  }
  // F J F^{-1} is complex symmetric since J^T E = E J
  const CMat Sblk = F * J * Finv;
  std::normal_distribution<double> nd(0.0, mix);
  CMat S = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      S(i, j) = cd(nd(rng), nd(rng));
      S(j, i) = -S(i, j);
    }
  const CMat O = S.exp();  // O^T O = I
  return O * Sblk * O.transpose();
}

CMat hamiltonian_matrix(const PotentialSpec& V) {
  CMat H = laplacian(*V.grid()).cast<cd>();
  H += V.matrix();
  return H;
}

std::vector<NullPair> nullspace_X1(const PotentialSpec& V, GridPtr grid, double tol_rank) {
  check_same_grid(grid, V.grid());
  const int n = grid->size();
  const CMat R0 = lattice_R0_matrix(*grid, 0.0);
  CMat T = V.matrix() * R0;
  T += CMat::Identity(n, n);
  Eigen::BDCSVD<CMat> svd(T, Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  std::vector<NullPair> out;
  for (int i = 0; i < n; ++i)
    if (s(i) <= tol_rank * s(0)) {
      NullPair p;
      p.g = svd.matrixV().col(i);
      p.Psi = R0 * p.g;
      out.push_back(std::move(p));
    }
  return out;
}

const char* verdict_name(Verdict v) { return v == Verdict::EIGENVALUE ? "EIGENVALUE" : "RESONANCE"; }

StateClass classify_state(const GridFunction& Psi, double tol_res, bool reduced) {
  const Grid& g = *Psi.grid;
  const int n = g.size();
  CVec psi(n);
  RVec r(n);
  for (int i = 0; i < n; ++i) {
    r(i) = g.nodes.row(i).norm();
    psi(i) = reduced ? Psi.values(i) / r(i) : Psi.values(i);
  }
  StateClass sc;
  sc.linf = psi.cwiseAbs().maxCoeff();
  if (sc.linf == 0.0) throw Error(ErrorCode::ZERO_VECTOR, "state vanishes identically");
  Eigen::Index imax;
  psi.cwiseAbs().maxCoeff(&imax);
  const cd phase = std::abs(psi(imax)) > 0 ? std::conj(psi(imax)) / std::abs(psi(imax)) : cd(1.0);
  std::vector<int> idx;
  for (int i = 0; i < n; ++i)
    if (r(i) >= 2.0 * g.L / 3.0) idx.push_back(i);
  if (idx.size() < 8) throw Error(ErrorCode::FIT_WINDOW, "outer third holds fewer than 8 nodes");
  RMat Aft(idx.size(), 2);
  RVec b(idx.size());
  for (std::size_t m = 0; m < idx.size(); ++m) {
    const double ri = r(idx[m]);
    Aft(m, 0) = 1.0 / ri;
    Aft(m, 1) = 1.0 / (ri * ri);
    b(m) = (phase * psi(idx[m])).real();
  }
  const RVec c = Aft.colPivHouseholderQr().solve(b);
  sc.c0 = c(0);
  sc.c1 = c(1);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += r(i) * std::abs(psi(i));
    den += std::abs(psi(i));
  }
  sc.inner_scale = num / den;
  const GridFunction prof(Psi.grid, psi);
  sc.l1 = lp_norm(prof, 1.0);
  sc.l2 = lp_norm(prof, 2.0);
  sc.verdict = std::abs(sc.c0) > tol_res * sc.linf * sc.inner_scale ? Verdict::RESONANCE : Verdict::EIGENVALUE;
  return sc;
}

Filtration build_filtration(const PotentialSpec& V, GridPtr grid, double tol_rank, int max_levels) {
  check_same_grid(grid, V.grid());
  const int n = grid->size();
  if (max_levels <= 0) max_levels = n;
  Filtration F;
  const std::vector<NullPair> x1 = nullspace_X1(V, grid, tol_rank);
  if (x1.empty()) return F;
  const CMat R0 = lattice_R0_matrix(*grid, 0.0);
  CMat T = R0 * V.matrix();
  T += CMat::Identity(n, n);
  Eigen::BDCSVD<CMat> svd(T, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  int r = 0;
  while (r < n && s(r) > tol_rank * s(0)) ++r;
  const CMat Ul = svd.matrixU().rightCols(n - r);

  CMat X1(n, x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i) X1.col(i) = x1[i].Psi;
  F.spaces.push_back(orth(X1, 1e-8));
  F.dims.push_back(static_cast<int>(F.spaces.back().cols()));
  while (true) {
    if (F.K() >= max_levels) throw Error(ErrorCode::NO_STABILIZATION, "filtration keeps growing");
    const CMat& Xk = F.spaces.back();
    const CMat RX = R0 * Xk;
    const CMat C = Ul.adjoint() * RX;
    const CMat cs = null_space(C, 1e-6 * std::max(1e-300, RX.operatorNorm()));
    if (cs.cols() == 0) break;
    CMat sols(n, cs.cols());
    for (int c = 0; c < cs.cols(); ++c) {
      const CVec rhs = RX * cs.col(c);
      const CVec t = svd.matrixU().leftCols(r).adjoint() * rhs;
      sols.col(c) = svd.matrixV().leftCols(r) * (t.array() / s.head(r).array().cast<cd>()).matrix();
    }
    CMat W(n, Xk.cols() + sols.cols());
    W << Xk, sols;
    CMat next = orth(W, 1e-6);
    if (next.cols() == Xk.cols()) break;
    F.spaces.push_back(next);
    F.dims.push_back(static_cast<int>(next.cols()));
  }
  return F;
}

JordanBasis build_threshold_basis(const PotentialSpec& V, GridPtr grid, double tol_rank) {
  const Filtration F = build_filtration(V, grid, tol_rank);
  JordanBasis b;
  b.grid = grid;
  if (F.K() == 0) return b;
  const CMat& Y = F.spaces.back();
  const CMat H = hamiltonian_matrix(V);
  const CMat Nc = Y.adjoint() * (H * Y);
  const CMat Gc = Y.transpose() * grid->flat_w.cast<cd>().asDiagonal() * Y;
  JordanOptions opt;
  opt.tol_rank = tol_rank;
  opt.scale = H.cwiseAbs().colwise().sum().maxCoeff();
  const JordanBasis bc = jordan_dual_basis(Nc, Gc, opt);
  b.K = bc.K;
  b.L = bc.L;
  for (const auto& c : bc.chains) {
    Chain ch;
    ch.k = c.k;
    for (const auto& v : c.psi) ch.psi.push_back(Y * v);
    b.chains.push_back(std::move(ch));
  }
  const CMat S = b.stacked();
  b.gram = S.transpose() * grid->flat_w.cast<cd>().asDiagonal() * S;
  return b;
}

namespace {
CMat weighted(const Grid& g, const CVec& v) { return (g.flat_w.cast<cd>().array() * v.array()).matrix(); }
}  // namespace

DenseOperator build_P0(const JordanBasis& b) {
  const Grid& g = *b.grid;
  CMat P = CMat::Zero(g.size(), g.size());
  for (const auto& c : b.chains)
    for (int j = 1; j <= c.k; ++j) P += c.psi[j - 1] * weighted(g, c.psi[c.k - j]).transpose();
  return DenseOperator(b.grid, P, OpKind::MATRIX);
}

DenseOperator build_Ptilde0(const JordanBasis& b) {
  const Grid& g = *b.grid;
  CMat P = CMat::Zero(g.size(), g.size());
  for (const auto& c : b.chains) P += c.psi[c.k - 1] * weighted(g, c.psi[0]).transpose();
  return DenseOperator(b.grid, P, OpKind::MATRIX);
}

DenseOperator build_Qtilde0(const JordanBasis& b) {
  return add(DenseOperator::identity(b.grid), build_Ptilde0(b), -1.0);
}

ThresholdReport threshold_report(const PotentialSpec& V, GridPtr grid, double tol_rank, double tol_res) {
  ThresholdReport rep;
  rep.tol_rank = tol_rank;
  rep.tol_res = tol_res;
  rep.mode = grid->mode;
  rep.L = grid->L;
  rep.M = grid->n_side;
  const Filtration F = build_filtration(V, grid, tol_rank);
  rep.dims = F.dims;
  if (F.K() == 0) return rep;
  const CMat& X1 = F.spaces.front();
  for (int c = 0; c < X1.cols(); ++c) {
    const StateClass sc = classify_state(GridFunction(grid, X1.col(c)), tol_res, grid->mode == GridMode::RADIAL_SWAVE);
    rep.verdicts.push_back(sc.verdict);
    rep.c0.push_back(sc.c0);
  }
  return rep;
}

namespace {
double lowest_free_eigenvalue(const Grid& g) {
  const double pi = std::numbers::pi;
  if (g.mode == GridMode::RADIAL_SWAVE) {
    const double s = std::sin(pi * g.h / (4.0 * g.L));
    return 4.0 * s * s / (g.h * g.h);
  }
  const double s = std::sin(pi / (2.0 * (g.n_side + 1)));
  return 3.0 * 4.0 * s * s / (g.h * g.h);
}

bool is_hermitian(const PotentialSpec& V) {
  if (!V.is_real()) return false;
  if (V.extra && (*V.extra - V.extra->transpose()).norm() != 0.0) return false;
  return true;
}

CMat projector_from_basis(const JordanBasis& b) { return build_P0(b).matrix; }
}  // namespace

PppResult build_Ppp(const PotentialSpec& V, GridPtr grid, const PppOptions& opt) {
  check_same_grid(grid, V.grid());
  const Grid& g = *grid;
  const int n = g.size();
  const double edge = opt.delta_edge >= 0.0 ? opt.delta_edge : 3.0 * lowest_free_eigenvalue(g);
  const CMat H = hamiltonian_matrix(V);

  std::vector<cd> evals;
  CMat evecs;
  if (is_hermitian(V)) {
    Eigen::SelfAdjointEigenSolver<RMat> es(H.real());
    evals.resize(n);
    for (int i = 0; i < n; ++i) evals[i] = es.eigenvalues()(i);
    evecs = es.eigenvectors().cast<cd>();
  } else {
    Eigen::ComplexEigenSolver<CMat> es(H);
    evals.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
    evecs = es.eigenvectors();
  }

  struct Cluster {
    cd center;
    std::vector<int> members;
  };
  std::vector<Cluster> clusters;
  for (int i = 0; i < n; ++i) {
    const cd mu = evals[i];
    if (!(mu.real() < -edge || std::abs(mu.imag()) > opt.tol_imag)) continue;
    bool joined = false;
    for (auto& c : clusters)
      if (std::abs(mu - c.center) <= opt.tol_cluster * std::max(1.0, std::abs(c.center))) {
        c.members.push_back(i);
        cd s = 0.0;
        for (int m : c.members) s += evals[m];
        c.center = s / double(c.members.size());
        joined = true;
        break;
      }
    if (!joined) clusters.push_back({mu, {i}});
  }
  for (std::size_t a = 0; a < clusters.size(); ++a)
    for (std::size_t b = a + 1; b < clusters.size(); ++b) {
      const double d = std::abs(clusters[a].center - clusters[b].center);
      if (d <= 10.0 * opt.tol_cluster * std::max(1.0, std::abs(clusters[a].center)))
        throw Error(ErrorCode::CLUSTER_AMBIGUOUS, "two eigenvalue clusters within 10x the clustering tolerance");
    }
  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    return a.center.real() != b.center.real() ? a.center.real() < b.center.real() : a.center.imag() < b.center.imag();
  });

  PppResult res;
  CMat P = CMat::Zero(n, n);
  const CMat W = g.flat_w.cast<cd>().asDiagonal();
  for (const auto& c : clusters) {
    CMat Pc;
    bool done = false;
    if (c.members.size() == 1) {
      const CVec v = evecs.col(c.members[0]);
      const cd bvv = bpair(g, v, v);
      if (std::abs(bvv) > 1e-8 * v.squaredNorm() * g.flat_w(0)) {
        Pc = v * weighted(g, v).transpose() / bvv;
        done = true;
      }
    }
    if (!done) {
      const int m = static_cast<int>(c.members.size());
      CMat Hm = H;
      Hm.diagonal().array() -= c.center;
      const double sc = Hm.operatorNorm();
      const std::vector<CMat> Z = staircase(Hm / sc, opt.tol_rank * 1e2, m);
      const CMat Y = Z.back();
      const CMat Nc = Y.adjoint() * (Hm * Y);
      const CMat Gc = Y.transpose() * W * Y;
      JordanOptions jo;
      jo.tol_rank = opt.tol_rank;
      jo.scale = sc;
      jo.tol_sym = 1e-6;
      JordanBasis bc = jordan_dual_basis(Nc, Gc, jo);
      JordanBasis lifted;
      lifted.grid = grid;
      for (const auto& ch : bc.chains) {
        Chain cc;
        cc.k = ch.k;
        for (const auto& v : ch.psi) cc.psi.push_back(Y * v);
        lifted.chains.push_back(std::move(cc));
      }
      Pc = projector_from_basis(lifted);
    }
    res.centers.push_back(c.center);
    res.parts.emplace_back(grid, Pc, OpKind::MATRIX);
    P += Pc;
  }
  if (opt.include_zero) {
    const JordanBasis b = build_threshold_basis(V, grid, opt.tol_rank);
    if (b.dim() > 0) {
      const CMat P0 = build_P0(b).matrix;
      res.centers.push_back(0.0);
      res.parts.emplace_back(grid, P0, OpKind::MATRIX);
      P += P0;
    }
  }
  res.P = DenseOperator(grid, P, OpKind::MATRIX);
  return res;
}

std::vector<int> kernel_staircase(const CMat& H, int kmax, double tol_rank) {
  const double sc = H.operatorNorm();
  const CMat Hn = sc > 0 ? CMat(H / sc) : H;
  const int n = static_cast<int>(H.rows());
  std::vector<int> dims;
  CMat prev(n, 0);
  for (int k = 1; k <= kmax; ++k) {
    const CMat Pc = CMat::Identity(n, n) - prev * prev.adjoint();
    prev = null_space(Pc * Hn, tol_rank);
    dims.push_back(static_cast<int>(prev.cols()));
  }
  return dims;
}

ChainFixture build_chain_fixture(GridPtr grid, const std::vector<int>& L, std::uint64_t seed) {
  const Grid& g = *grid;
  const int M = g.size();
  std::vector<int> blocks;
  for (std::size_t k = 1; k <= L.size(); ++k)
    for (int l = 0; l < L[k - 1]; ++l) blocks.push_back(static_cast<int>(k));
  const int n = static_cast<int>(blocks.size() ? std::accumulate(blocks.begin(), blocks.end(), 0) : 0);
  if (n == 0) throw Error(ErrorCode::INVALID_ARGUMENT, "empty chain target");
  if (4 * n > M) throw Error(ErrorCode::INVALID_ARGUMENT, "chain target exceeds grid dimension");
  const int K = static_cast<int>(L.size());
  const RMat A = laplacian(g);

  for (int attempt = 0; attempt < 5; ++attempt) {
    std::mt19937_64 rng(seed + 7919ULL * attempt);
    std::uniform_real_distribution<double> ud(0.5, 1.5);
    RMat Phi(M, n);
    for (int m = 0; m < n; ++m) {
      const double w = ud(rng), a = ud(rng);
      for (int i = 0; i < M; ++i) {
        const double r = g.nodes.row(i).norm();
        Phi(i, m) = a * std::pow(r, m + 1) * std::exp(-r * r / (2.0 * w * w));
      }
    }
    const RMat Qr = Eigen::HouseholderQR<RMat>(Phi).householderQ() * RMat::Identity(M, n);
    std::normal_distribution<double> nd(0.0, 0.3);
    CMat S = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        S(i, j) = cd(nd(rng), nd(rng));
        S(j, i) = -S(i, j);
      }
    const CMat O = S.exp();
    CMat F = CMat::Zero(n, n), J = CMat::Zero(n, n);
    int off = 0;
    for (int b : blocks) {
      CMat E = CMat::Zero(b, b);
      for (int i = 0; i < b; ++i) E(i, b - 1 - i) = 1.0;
      F.block(off, off, b, b) = (CMat::Identity(b, b) + kI * E) / cd(1.0, 1.0);
      for (int i = 0; i + 1 < b; ++i) J(off + i, off + i + 1) = 1.0;
      off += b;
    }
    const CMat Y = Qr.cast<cd>() * O * F / std::sqrt(g.h);
    const CMat R = Y * J - A.cast<cd>() * Y;
    const CMat YR = Y.transpose() * R;
    if ((YR - YR.transpose()).norm() > 1e-8 * YR.norm()) continue;
    Eigen::FullPivLU<CMat> lu(YR);
    if (lu.rank() < n) continue;
    CMat Fm = R * lu.solve(R.transpose());
    Fm = (0.5 * (Fm + Fm.transpose())).eval();
    ChainFixture fx;
    fx.V = make_potential("chain_fixture", GridFunction::zeros(grid));
    fx.V.extra = Fm;
    fx.Y = Y;
    fx.L = L;
    CMat Hf = A.cast<cd>() + Fm;
    const std::vector<int> dims = kernel_staircase(Hf, K + 1);
    bool ok = true;
    for (int k = 1; k <= K + 1; ++k) {
      int expect = 0;
      for (int kk = 1; kk <= K; ++kk) expect += std::min(k, kk) * L[kk - 1];
      if (dims[k - 1] != expect) ok = false;
    }
    if (ok) return fx;
  }
  throw Error(ErrorCode::CONSTRUCTION_FAILED, "chain fixture construction failed after bounded retries");
}

}  // namespace nsa
