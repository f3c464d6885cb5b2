// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "nsa/threshold_jordan.hpp"

namespace nsa {

// constrained one-sided inverse at zero energy and the data it is built from
struct RegularizedInverse {
  GridPtr grid;
  PotentialSpec V;
  JordanBasis basis;
  ResolventModel model;
  CMat R00;        // R0(0) effective
  CMat S0;         // effective matrix; S0 = S0 Qt0
  CMat Qt0;        // I - Pt0
  CMat top;        // columns psi_{k,k}, one per chain
  CMat bottom;     // columns psi_{1,k}, one per chain
  CMat border;     // flat weights times R0(0) psi_{k,k}
  CMat duality;    // B(V psi_{1,k}, R0(0) psi_{k',k'}), expected -identity
  double window = 0.0;  // largest |lambda| with contraction <= 1/2

  int chains() const { return static_cast<int>(top.cols()); }
};

RegularizedInverse build_S0(const PotentialSpec& V, GridPtr grid, const JordanBasis& basis,
                            const ResolventModel& model = {});

// || S0 Qt0 V (R0(z) - R0(0)) || on L1
double s_contraction(const RegularizedInverse& reg, double lambda);

// Qt0 (I + V R0(0)) S0 = identity on the complement of the bottom pairings
double s0_identity_residual(const RegularizedInverse& reg);
// max |B(S0 f, R0(0) psi_{k,k})| over unit columns f
double s0_range_residual(const RegularizedInverse& reg);

enum class SMethod { AUTO, NEUMANN, DIRECT };

struct SLambda {
  CMat S;  // effective matrix
  double contraction = 0.0;
  int terms = 0;
  SMethod used = SMethod::DIRECT;
};

// S(lambda) = sum_m (-S0 Qt0 V B0)^m S0 inside the window, bordered solve otherwise
SLambda build_S_lambda(const RegularizedInverse& reg, double lambda, SMethod method = SMethod::AUTO);
// || Qt0 (I + V R0(z)) S - Qt0 || relative
double s_lambda_residual(const RegularizedInverse& reg, double lambda, const CMat& S);

struct ChainResidual {
  int chain = 0, k = 0, j = 0;
  double residual = 0.0;  // relative L1 residual of the identity
};

std::vector<ChainResidual> chain_identity_residual(const PotentialSpec& V, GridPtr grid, const JordanBasis& basis,
                                                   double lambda, const ResolventModel& model = {});
std::vector<ChainResidual> telescope_residual(const PotentialSpec& V, GridPtr grid, const JordanBasis& basis,
                                              double lambda, const ResolventModel& model = {});
// raw relative residuals; the admissible size scales like lambda^{-2k}
std::vector<ChainResidual> exact_inverse_residual(const PotentialSpec& V, GridPtr grid, const JordanBasis& basis,
                                                  double lambda, const ResolventModel& model = {});

enum class FormulaVariant { POLE_SPLIT, CORRECTION, B0_PAIRING };

struct FormulaResult {
  CVec out;
  CVec g;                 // S(lambda) Qt0 f
  std::vector<cd> F;      // B((I + V R0(z)) g, psi_{1,k}) per chain
  std::vector<cd> coeff;  // coefficient of the pole vector per chain
};

FormulaResult inverse_via_formula(const RegularizedInverse& reg, double lambda, const CVec& f,
                                  FormulaVariant variant = FormulaVariant::POLE_SPLIT);
// same, reusing S(lambda) built at this lambda for many data vectors
FormulaResult inverse_via_formula(const RegularizedInverse& reg, const SLambda& S, double lambda, const CVec& f,
                                  FormulaVariant variant = FormulaVariant::POLE_SPLIT);
// dense reference (I + V R0(z))^{-1} f
CVec dense_inverse_apply(const PotentialSpec& V, double lambda, const CVec& f, const ResolventModel& model = {});

// (I - P0) f
CVec admissible_part(const JordanBasis& b, const CVec& f);

struct LowEnergyRow {
  double lambda = 0.0;
  double norm_admissible = 0.0;
  double norm_generic = 0.0;
  double contraction = 0.0;
  double chain_res = 0.0, telescope_res = 0.0, exact_res = 0.0;
};

struct LowEnergyScan {
  std::vector<LowEnergyRow> rows;
  double slope_generic = 0.0;      // log-log slope of the generic norms
  double admissible_ratio = 0.0;   // max / value at the largest lambda
  int K = 0;
};

LowEnergyScan low_energy_scan(const RegularizedInverse& reg, const std::vector<double>& lambdas, const CVec& f);

std::string low_energy_csv(const LowEnergyScan& scan);

}  // namespace nsa
