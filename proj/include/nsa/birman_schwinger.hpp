// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsa/core_grid.hpp"
#include "nsa/resolvent.hpp"

namespace nsa {

struct PotentialSpec {
  std::string name;
  GridFunction values;  // multiplication part
  double p = 1.4, q = 2.0;
  double composite_norm = 0.0;
  // optional dense symmetric part (fixtures); the operator is diag(values) + extra
  std::optional<CMat> extra;
  // known zero-energy state (reduced samples), when the construction provides one
  std::optional<CVec> eigenfunction;

  GridPtr grid() const { return values.grid; }
  bool is_diagonal() const { return !extra.has_value(); }
  bool is_real() const;
  CMat matrix() const;  // effective operator matrix
  DenseOperator op() const;
};

double composite_norm(const GridFunction& V, double p, double q);
PotentialSpec make_potential(std::string name, GridFunction values, double p = 1.4, double q = 2.0);
PotentialSpec scaled(const PotentialSpec& V, cd c);
PotentialSpec conjugated(const PotentialSpec& V);

// I + V R0(lambda^2 +- i0)
DenseOperator build_bs(const PotentialSpec& V, GridPtr grid, double lambda, Branch sign,
                       const ResolventModel& model = {ModelKind::QUADRATURE});
CMat bs_matrix(const PotentialSpec& V, double lambda, Branch sign, const ResolventModel& model);

struct InverseResult {
  DenseOperator inv;
  double cond = 0.0;
  double residual = 0.0;
};

inline constexpr double kCondMax = 1e12;

InverseResult direct_inverse(const DenseOperator& A, double cond_max = kCondMax);

struct HighEnergyReport {
  std::vector<double> lambdas;
  std::vector<double> norms;  // operator_l1_norm((V R0)^2)
  bool found = false;
  double lambda1 = 0.0;
};

HighEnergyReport high_energy_norm_scan(const PotentialSpec& V, GridPtr grid, const std::vector<double>& lambdas,
                                       const ResolventModel& model = {ModelKind::QUADRATURE});

struct UniformInverseReport {
  std::vector<double> lambdas;
  std::vector<double> norms;
  std::vector<double> conds;
  double sup = 0.0;
  double argmax = 0.0;
};

UniformInverseReport uniform_inverse_scan(const PotentialSpec& V, GridPtr grid, const std::vector<double>& lambdas,
                                          const ResolventModel& model = {ModelKind::QUADRATURE},
                                          double cond_max = kCondMax);

struct NeumannResult {
  DenseOperator inv;
  double contraction = 0.0;
  int terms = 0;
};

NeumannResult local_neumann_inverse(const PotentialSpec& V, GridPtr grid, double lambda0, double r, double lambda,
                                    const ResolventModel& model = {ModelKind::QUADRATURE});

// contraction factor operator_l1_norm(S0 V B_{lambda0}(lambda^2)) only
double neumann_contraction(const PotentialSpec& V, GridPtr grid, double lambda0, double lambda,
                           const ResolventModel& model = {ModelKind::QUADRATURE});

}  // namespace nsa
