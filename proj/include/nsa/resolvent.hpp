// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <numbers>
#include <vector>

#include "nsa/core_grid.hpp"
#include "nsa/kernels.hpp"

namespace nsa {

enum class Branch { PLUS, MINUS };

struct ResolventSpec {
  double lambda = 0.0;
  Branch sign = Branch::PLUS;
};

inline double branch_sign(Branch b) { return b == Branch::PLUS ? 1.0 : -1.0; }

cd free_kernel_3d(const ResolventSpec& spec, double d);
cd free_kernel_radial(const ResolventSpec& spec, double r, double rp);

// mean of 1/|x| over the unit cube centred at the origin
double cube_mean_inverse_distance();

// sampled continuum kernel (KERNEL kind)
DenseOperator build_R0(GridPtr grid, const ResolventSpec& spec, Exec exec = default_exec());
// closed-form difference kernel R0(lambda^2) - R0(lambda0^2)
DenseOperator build_B(GridPtr grid, double lambda0, double lambda, Branch sign, Exec exec = default_exec());

struct KernelDiffReport {
  double mu = 0.0, p = 1.4, p_prime = 3.5;
  std::vector<double> lambdas;
  std::vector<double> column_norms;  // L^{p'} norm of the difference kernel column at the origin
  std::vector<double> vb_norms;      // operator_l1_norm(V B_mu(lambda^2))
  double exponent = 0.0, expected = 0.0;
  bool ok = false;
};

KernelDiffReport kernel_difference_check(GridPtr grid, const GridFunction& V, const std::vector<double>& lambdas,
                                         double mu = 0.0, double p = 1.4);

// induced-L1 norm of R0(l^2) - (I + l^2 R0(l^2)) R0(0); the composition is completed by the
// analytic tail beyond the grid extent in radial mode
double resolvent_identity_residual(GridPtr grid, double lambda);

// discrete Laplacian: radial (odd ghost at 0, Neumann at L) or 7-point Dirichlet box
RMat laplacian(const Grid& g);

// rotated lattice energy z(lambda) = lambda^2 exp(i phi sign(lambda)); MINUS conjugates
cd lattice_energy(double lambda, Branch sign, double phi);
// (A - z)^{-1} as a MATRIX operator
DenseOperator lattice_R0(GridPtr grid, double lambda, Branch sign, double phi);
CMat lattice_R0_matrix(const Grid& g, cd z);
// sparse solve of (A - z + diag(d)) X = rhs; d empty means zero
CMat lattice_solve(const Grid& g, cd z, const CMat& rhs, const CVec& d = CVec());

enum class ModelKind { QUADRATURE, LATTICE };

struct ResolventModel {
  ModelKind kind = ModelKind::LATTICE;
  double phi = std::numbers::pi / 4.0;
};

CMat R0_effective(GridPtr grid, double lambda, Branch sign, const ResolventModel& model);
// effective matrix of R0(lambda^2) - R0(lambda0^2) for the chosen model
CMat B_effective(GridPtr grid, double lambda0, double lambda, Branch sign, const ResolventModel& model);

}  // namespace nsa
