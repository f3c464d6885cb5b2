// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "nsa/errors.hpp"

namespace nsa {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

enum class GridMode { RADIAL_SWAVE, BOX3D };
enum class WeightSet { VOLUME, FLAT };

struct Grid {
  GridMode mode = GridMode::RADIAL_SWAVE;
  double L = 0.0;  // radius (radial) or half-width (box)
  double h = 0.0;
  int n_side = 0;  // node_count argument of make_grid
  RMat nodes;      // size x 1 (radii) or size x 3 (lattice points)
  RVec vol_w;      // 4 pi r^2 h (radial) or h^3 (box)
  RVec flat_w;     // h (radial, reduced u = r psi) or h^3 (box)

  int size() const { return static_cast<int>(nodes.rows()); }
  double r(int i) const { return nodes(i, 0); }
  const RVec& weights(WeightSet ws) const { return ws == WeightSet::VOLUME ? vol_w : flat_w; }
  bool uniform_flat() const;
};

using GridPtr = std::shared_ptr<const Grid>;

inline constexpr int kDefaultBoxCap = 14;

GridPtr make_grid(GridMode mode, double extent, int node_count, int box_cap = kDefaultBoxCap);

struct GridFunction {
  GridPtr grid;
  CVec values;

  GridFunction() = default;
  GridFunction(GridPtr g, CVec v);
  static GridFunction zeros(GridPtr g);
  static GridFunction constant(GridPtr g, cd c);
  int size() const { return static_cast<int>(values.size()); }
};

enum class OpKind { KERNEL, MATRIX };

struct DenseOperator {
  GridPtr grid;
  CMat matrix;
  OpKind kind = OpKind::MATRIX;

  DenseOperator() = default;
  DenseOperator(GridPtr g, CMat m, OpKind k);
  static DenseOperator identity(GridPtr g);
  static DenseOperator zero(GridPtr g);
  static DenseOperator diagonal(const GridFunction& v);

  // matrix acting on sample vectors (kernel entries times flat column weights)
  CMat effective() const;
  int size() const { return static_cast<int>(matrix.rows()); }
};

void check_same_grid(const GridPtr& a, const GridPtr& b);

double lp_norm(const GridFunction& f, double p, WeightSet ws = WeightSet::VOLUME);
cd bilinear_pair(const GridFunction& f, const GridFunction& g);
cd sesquilinear_pair(const GridFunction& f, const GridFunction& g);
double operator_l1_norm(const DenseOperator& A);

DenseOperator compose(const DenseOperator& A, const DenseOperator& B);
DenseOperator add(const DenseOperator& A, const DenseOperator& B, cd beta = 1.0);
DenseOperator scale(const DenseOperator& A, cd alpha);
GridFunction apply(const DenseOperator& A, const GridFunction& f);
DenseOperator transpose_bilinear(const DenseOperator& A);
DenseOperator inverse(const DenseOperator& A);

// flat-weighted bilinear pairing of raw sample vectors
cd bpair(const Grid& g, const CVec& f, const CVec& h);
// induced L1 -> L1 norm of an effective matrix on the flat weights
double l1_norm_matrix(const Grid& g, const CMat& E);
// flat-weight L1 norm of a raw sample vector
double l1_flat(const Grid& g, const CVec& f);

}  // namespace nsa
