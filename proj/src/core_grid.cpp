// SPDX-License-Identifier: Apache-2.0
#include "nsa/core_grid.hpp"

#include <cmath>
#include <numbers>

#include "nsa/kernels.hpp"

namespace nsa {

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::INVALID_ARGUMENT: return "INVALID_ARGUMENT";
    case ErrorCode::GRID_MISMATCH: return "GRID_MISMATCH";
    case ErrorCode::DENSE_CAP: return "DENSE_CAP";
    case ErrorCode::NEAR_SINGULAR: return "NEAR_SINGULAR";
    case ErrorCode::NO_CONTRACTION: return "NO_CONTRACTION";
    case ErrorCode::NOT_NILPOTENT: return "NOT_NILPOTENT";
    case ErrorCode::NOT_SYMMETRIC: return "NOT_SYMMETRIC";
    case ErrorCode::DEGENERATE_PAIRING: return "DEGENERATE_PAIRING";
    case ErrorCode::NO_STABILIZATION: return "NO_STABILIZATION";
    case ErrorCode::ZERO_VECTOR: return "ZERO_VECTOR";
    case ErrorCode::FIT_WINDOW: return "FIT_WINDOW";
    case ErrorCode::DUALITY_DEGENERATE: return "DUALITY_DEGENERATE";
    case ErrorCode::CLUSTER_AMBIGUOUS: return "CLUSTER_AMBIGUOUS";
    case ErrorCode::EIGEN_REJECTED: return "EIGEN_REJECTED";
    case ErrorCode::CONSTRUCTION_FAILED: return "CONSTRUCTION_FAILED";
    case ErrorCode::CONFIG: return "CONFIG";
  }
  return "UNKNOWN";
}

bool Grid::uniform_flat() const {
  for (int i = 1; i < flat_w.size(); ++i)
    if (flat_w(i) != flat_w(0)) return false;
  return true;
}

GridPtr make_grid(GridMode mode, double extent, int node_count, int box_cap) {
  if (node_count < 8) throw Error(ErrorCode::INVALID_ARGUMENT, "node_count < 8");
  if (!(extent > 0.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "extent must be positive");
  auto g = std::make_shared<Grid>();
  g->mode = mode;
  g->L = extent;
  g->n_side = node_count;
  if (mode == GridMode::RADIAL_SWAVE) {
    const int M = node_count;
    g->h = extent / M;
    g->nodes.resize(M, 1);
    g->vol_w.resize(M);
    g->flat_w.setConstant(M, g->h);
    for (int i = 0; i < M; ++i) {
      const double r = (i + 0.5) * g->h;
      g->nodes(i, 0) = r;
      g->vol_w(i) = 4.0 * std::numbers::pi * r * r * g->h;
    }
  } else {
    if (node_count > box_cap)
      throw Error(ErrorCode::DENSE_CAP, "BOX3D node_count " + std::to_string(node_count) +
                                            " exceeds dense cap " + std::to_string(box_cap));
    const int N = node_count;
    g->h = 2.0 * extent / N;
    const int n = N * N * N;
    g->nodes.resize(n, 3);
    int idx = 0;
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b)
        for (int c = 0; c < N; ++c, ++idx) {
          g->nodes(idx, 0) = -extent + (a + 0.5) * g->h;
          g->nodes(idx, 1) = -extent + (b + 0.5) * g->h;
          g->nodes(idx, 2) = -extent + (c + 0.5) * g->h;
        }
    const double w = g->h * g->h * g->h;
    g->vol_w.setConstant(n, w);
    g->flat_w.setConstant(n, w);
  }
  return g;
}

GridFunction::GridFunction(GridPtr g, CVec v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid || values.size() != grid->size())
    throw Error(ErrorCode::INVALID_ARGUMENT, "value count differs from node count");
}

GridFunction GridFunction::zeros(GridPtr g) {
  const int n = g->size();
  return GridFunction(std::move(g), CVec::Zero(n));
}

GridFunction GridFunction::constant(GridPtr g, cd c) {
  const int n = g->size();
  return GridFunction(std::move(g), CVec::Constant(n, c));
}

DenseOperator::DenseOperator(GridPtr g, CMat m, OpKind k) : grid(std::move(g)), matrix(std::move(m)), kind(k) {
  if (!grid || matrix.rows() != grid->size() || matrix.cols() != grid->size())
    throw Error(ErrorCode::INVALID_ARGUMENT, "operator must be square with node-count dimension");
}

DenseOperator DenseOperator::identity(GridPtr g) {
  const int n = g->size();
  return DenseOperator(std::move(g), CMat::Identity(n, n), OpKind::MATRIX);
}

DenseOperator DenseOperator::zero(GridPtr g) {
  const int n = g->size();
  return DenseOperator(std::move(g), CMat::Zero(n, n), OpKind::MATRIX);
}

DenseOperator DenseOperator::diagonal(const GridFunction& v) {
  return DenseOperator(v.grid, v.values.asDiagonal().toDenseMatrix(), OpKind::MATRIX);
}

CMat DenseOperator::effective() const {
  if (kind == OpKind::MATRIX) return matrix;
  return matrix * grid->flat_w.cast<cd>().asDiagonal();
}

void check_same_grid(const GridPtr& a, const GridPtr& b) {
  if (a.get() != b.get()) {
    if (!a || !b || a->mode != b->mode || a->size() != b->size() || a->L != b->L)
      throw Error(ErrorCode::GRID_MISMATCH, "operands live on different grids");
  }
}

double lp_norm(const GridFunction& f, double p, WeightSet ws) {
  if (!(p >= 1.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "lp_norm requires p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (int i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f.values(i)));
    return m;
  }
  const RVec& w = f.grid->weights(ws);
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += w(i) * std::pow(std::abs(f.values(i)), p);
  return std::pow(s, 1.0 / p);
}

cd bpair(const Grid& g, const CVec& f, const CVec& h) {
  cd s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += g.flat_w(i) * f(i) * h(i);
  return s;
}

double l1_flat(const Grid& g, const CVec& f) {
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += g.flat_w(i) * std::abs(f(i));
  return s;
}

cd bilinear_pair(const GridFunction& f, const GridFunction& g) {
  check_same_grid(f.grid, g.grid);
  return bpair(*f.grid, f.values, g.values);
}

cd sesquilinear_pair(const GridFunction& f, const GridFunction& g) {
  check_same_grid(f.grid, g.grid);
  return bpair(*f.grid, f.values, g.values.conjugate());
}

double l1_norm_matrix(const Grid& g, const CMat& E) { return weighted_l1_max(E, g.flat_w); }

double operator_l1_norm(const DenseOperator& A) { return l1_norm_matrix(*A.grid, A.effective()); }

DenseOperator compose(const DenseOperator& A, const DenseOperator& B) {
  check_same_grid(A.grid, B.grid);
  return DenseOperator(A.grid, A.effective() * B.effective(), OpKind::MATRIX);
}

DenseOperator add(const DenseOperator& A, const DenseOperator& B, cd beta) {
  check_same_grid(A.grid, B.grid);
  if (A.kind == B.kind) return DenseOperator(A.grid, A.matrix + beta * B.matrix, A.kind);
  return DenseOperator(A.grid, A.effective() + beta * B.effective(), OpKind::MATRIX);
}

DenseOperator scale(const DenseOperator& A, cd alpha) { return DenseOperator(A.grid, alpha * A.matrix, A.kind); }

GridFunction apply(const DenseOperator& A, const GridFunction& f) {
  check_same_grid(A.grid, f.grid);
  return GridFunction(A.grid, A.effective() * f.values);
}

DenseOperator transpose_bilinear(const DenseOperator& A) {
  // B(Af, g) = B(f, A^T g) with A^T_ij = E_ji w_j / w_i; kernels: K^T
  if (A.kind == OpKind::KERNEL || A.grid->uniform_flat())
    return DenseOperator(A.grid, A.matrix.transpose(), A.kind);
  const RVec& w = A.grid->flat_w;
  CMat T = A.matrix.transpose();
  for (int i = 0; i < T.rows(); ++i)
    for (int j = 0; j < T.cols(); ++j) T(i, j) *= w(j) / w(i);
  return DenseOperator(A.grid, T, OpKind::MATRIX);
}

DenseOperator inverse(const DenseOperator& A) {
  Eigen::PartialPivLU<CMat> lu(A.effective());
  return DenseOperator(A.grid, lu.inverse(), OpKind::MATRIX);
}

}  // namespace nsa
