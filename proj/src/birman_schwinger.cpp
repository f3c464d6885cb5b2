// SPDX-License-Identifier: Apache-2.0
#include "nsa/birman_schwinger.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace nsa {

bool PotentialSpec::is_real() const {
  if (values.values.imag().cwiseAbs().maxCoeff() != 0.0) return false;
  if (extra && extra->imag().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

CMat PotentialSpec::matrix() const {
  CMat M = values.values.asDiagonal().toDenseMatrix();
  if (extra) M += *extra;
  return M;
}

DenseOperator PotentialSpec::op() const { return DenseOperator(values.grid, matrix(), OpKind::MATRIX); }

double composite_norm(const GridFunction& V, double p, double q) {
  return std::max(lp_norm(V, p), lp_norm(V, q));
}

PotentialSpec make_potential(std::string name, GridFunction values, double p, double q) {
  if (!(p >= 1.0 && p < 1.5 && q > 1.5))
    throw Error(ErrorCode::INVALID_ARGUMENT, "exponents must satisfy 1 <= p < 3/2 < q");
  PotentialSpec V;
  V.name = std::move(name);
  V.values = std::move(values);
  V.p = p;
  V.q = q;
  V.composite_norm = composite_norm(V.values, p, q);
  return V;
}

PotentialSpec scaled(const PotentialSpec& V, cd c) {
  PotentialSpec W = V;
  W.values.values *= c;
  if (W.extra) *W.extra *= c;
  W.composite_norm = composite_norm(W.values, W.p, W.q);
  W.eigenfunction.reset();
  return W;
}

PotentialSpec conjugated(const PotentialSpec& V) {
  PotentialSpec W = V;
  W.values.values = V.values.values.conjugate();
  if (W.extra) *W.extra = V.extra->conjugate();
  if (W.eigenfunction) *W.eigenfunction = V.eigenfunction->conjugate();
  return W;
}

CMat bs_matrix(const PotentialSpec& V, double lambda, Branch sign, const ResolventModel& model) {
  const GridPtr g = V.grid();
  const int n = g->size();
  const CMat R = R0_effective(g, lambda, sign, model);
  CMat M = V.is_diagonal() ? CMat(V.values.values.asDiagonal() * R) : CMat(V.matrix() * R);
  M += CMat::Identity(n, n);
  return M;
}

DenseOperator build_bs(const PotentialSpec& V, GridPtr grid, double lambda, Branch sign, const ResolventModel& model) {
  check_same_grid(grid, V.grid());
  return DenseOperator(grid, bs_matrix(V, lambda, sign, model), OpKind::MATRIX);
}

InverseResult direct_inverse(const DenseOperator& A, double cond_max) {
  const CMat E = A.effective();
  const int n = static_cast<int>(E.rows());
  Eigen::PartialPivLU<CMat> lu(E);
  CMat inv = lu.inverse();
  const double na = E.cwiseAbs().colwise().sum().maxCoeff();
  const double ni = inv.cwiseAbs().colwise().sum().maxCoeff();
  double cond = na * ni;
  if (!std::isfinite(cond)) cond = std::numeric_limits<double>::infinity();
  if (cond > cond_max) {
    std::ostringstream os;
    os << "condition estimate " << cond << " exceeds " << cond_max;
    throw Error(ErrorCode::NEAR_SINGULAR, os.str());
  }
  InverseResult r{DenseOperator(A.grid, inv, OpKind::MATRIX), cond, 0.0};
  r.residual = (E * inv - CMat::Identity(n, n)).cwiseAbs().colwise().sum().maxCoeff();
  return r;
}

HighEnergyReport high_energy_norm_scan(const PotentialSpec& V, GridPtr grid, const std::vector<double>& lambdas,
                                       const ResolventModel& model) {
  if (lambdas.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "empty lambda list");
  HighEnergyReport rep;
  rep.lambdas = lambdas;
  rep.norms.assign(lambdas.size(), 0.0);
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const CMat VR = bs_matrix(V, lambdas[k], Branch::PLUS, model) - CMat::Identity(grid->size(), grid->size());
    rep.norms[k] = l1_norm_matrix(*grid, VR * VR);
  }
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    if (rep.norms[k] < 0.25) {
      rep.found = true;
      rep.lambda1 = lambdas[k];
      break;
    }
  return rep;
}

UniformInverseReport uniform_inverse_scan(const PotentialSpec& V, GridPtr grid, const std::vector<double>& lambdas,
                                          const ResolventModel& model, double cond_max) {
  UniformInverseReport rep;
  rep.lambdas = lambdas;
  for (double lam : lambdas) {
    InverseResult r;
    try {
      r = direct_inverse(build_bs(V, grid, lam, Branch::PLUS, model), cond_max);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NEAR_SINGULAR) throw;
      std::ostringstream os;
      os << "at lambda = " << lam << " (" << e.what() << ")";
      throw Error(ErrorCode::NEAR_SINGULAR, os.str());
    }
    const double nrm = operator_l1_norm(r.inv);
    rep.norms.push_back(nrm);
    rep.conds.push_back(r.cond);
    if (nrm > rep.sup) {
      rep.sup = nrm;
      rep.argmax = lam;
    }
  }
  return rep;
}

namespace {
struct NeumannParts {
  CMat S0;
  CMat step;  // S0 V B
};

NeumannParts neumann_parts(const PotentialSpec& V, GridPtr grid, double lambda0, double lambda,
                           const ResolventModel& model) {
  NeumannParts p;
  p.S0 = direct_inverse(build_bs(V, grid, lambda0, Branch::PLUS, model)).inv.matrix;
  const CMat B = B_effective(grid, lambda0, lambda, Branch::PLUS, model);
  p.step = V.is_diagonal() ? CMat(p.S0 * (V.values.values.asDiagonal() * B)) : CMat(p.S0 * V.matrix() * B);
  return p;
}
}  // namespace

double neumann_contraction(const PotentialSpec& V, GridPtr grid, double lambda0, double lambda,
                           const ResolventModel& model) {
  return l1_norm_matrix(*grid, neumann_parts(V, grid, lambda0, lambda, model).step);
}

NeumannResult local_neumann_inverse(const PotentialSpec& V, GridPtr grid, double lambda0, double r, double lambda,
                                    const ResolventModel& model) {
  if (!(r > 0.0) || std::abs(lambda - lambda0) > r)
    throw Error(ErrorCode::INVALID_ARGUMENT, "lambda outside the window |lambda - lambda0| <= r");
  const NeumannParts p = neumann_parts(V, grid, lambda0, lambda, model);
  NeumannResult res;
  res.contraction = l1_norm_matrix(*grid, p.step);
  if (res.contraction >= 1.0) {
    std::ostringstream os;
    os << "contraction factor " << res.contraction << " >= 1; shrink the window radius";
    throw Error(ErrorCode::NO_CONTRACTION, os.str());
  }
  CMat sum = p.S0;
  CMat term = p.S0;
  res.terms = 1;
  for (int m = 1; m < 200 && res.contraction > 0.0; ++m) {
    term = -(p.step * term);
    sum += term;
    ++res.terms;
    if (l1_norm_matrix(*grid, term) < 1e-12) break;
  }
  res.inv = DenseOperator(grid, sum, OpKind::MATRIX);
  return res;
}

}  // namespace nsa
