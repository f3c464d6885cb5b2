// SPDX-License-Identifier: Apache-2.0
#include "nsa/low_energy_inverse.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "nsa/fit.hpp"

namespace nsa {

namespace {

cd energy(const ResolventModel& m, double lambda) {
  return m.kind == ModelKind::LATTICE ? lattice_energy(lambda, Branch::PLUS, m.phi) : cd(lambda * lambda);
}

// R0(z) X for the chosen model
CMat R0_apply(GridPtr grid, const ResolventModel& m, double lambda, const CMat& X) {
  if (m.kind == ModelKind::LATTICE) return lattice_solve(*grid, energy(m, lambda), X);
  return R0_effective(grid, lambda, Branch::PLUS, m) * X;
}

// R0(z) as a matrix
CMat R0_matrix(GridPtr grid, const ResolventModel& m, double lambda) {
  if (m.kind == ModelKind::LATTICE) {
    const int n = grid->size();
    return lattice_solve(*grid, energy(m, lambda), CMat::Identity(n, n));
  }
  return R0_effective(grid, lambda, Branch::PLUS, m);
}

// V X, using the diagonal when there is one
CMat apply_V(const PotentialSpec& V, const CMat& X) {
  if (V.is_diagonal()) return V.values.values.asDiagonal() * X;
  return V.matrix() * X;
}

CVec wmul(const Grid& g, const CVec& v) { return (g.flat_w.cast<cd>().array() * v.array()).matrix(); }

double rel_l1(const Grid& g, const CVec& r, const CVec& ref) {
  const double d = l1_flat(g, ref);
  return l1_flat(g, r) / (d > 0.0 ? d : 1.0);
}

// Qt0 X as a rank-d update of X
CMat apply_Qt0(const RegularizedInverse& reg, const CMat& X) {
  if (reg.chains() == 0) return X;
  CMat Wb(reg.bottom.rows(), reg.chains());
  for (int c = 0; c < reg.chains(); ++c) Wb.col(c) = wmul(*reg.grid, reg.bottom.col(c));
  return X - reg.top * (Wb.transpose() * X);
}

}  // namespace

RegularizedInverse build_S0(const PotentialSpec& V, GridPtr grid, const JordanBasis& basis,
                            const ResolventModel& model) {
  check_same_grid(grid, V.grid());
  const Grid& g = *grid;
  const int n = g.size();
  RegularizedInverse reg;
  reg.grid = grid;
  reg.V = V;
  reg.basis = basis;
  reg.model = model;
  const int d = static_cast<int>(basis.chains.size());
  reg.top.resize(n, d);
  reg.bottom.resize(n, d);
  for (int c = 0; c < d; ++c) {
    reg.top.col(c) = basis.chains[c].psi.back();
    reg.bottom.col(c) = basis.chains[c].psi.front();
  }
  reg.R00 = R0_effective(grid, 0.0, Branch::PLUS, model);
  const CMat Vm = V.matrix();
  CMat T0 = apply_V(V, reg.R00);
  T0 += CMat::Identity(n, n);
  const CMat Rt = reg.R00 * reg.top;
  reg.border.resize(n, d);
  for (int c = 0; c < d; ++c) reg.border.col(c) = wmul(g, Rt.col(c));
  reg.Qt0 = CMat::Identity(n, n);
  for (int c = 0; c < d; ++c) reg.Qt0 -= reg.top.col(c) * wmul(g, reg.bottom.col(c)).transpose();

  if (d > 0) {
    reg.duality = (Vm * reg.bottom).transpose() * reg.border;
    Eigen::JacobiSVD<CMat> svd(reg.duality);
    const RVec& s = svd.singularValues();
    if (s(d - 1) <= 1e-8 * s(0)) throw Error(ErrorCode::DUALITY_DEGENERATE, "duality pairing matrix is singular");
  }

  CMat Bm = CMat::Zero(n + d, n + d);
  Bm.topLeftCorner(n, n) = T0;
  Bm.topRightCorner(n, d) = reg.top;
  Bm.bottomLeftCorner(d, n) = reg.border.transpose();
  Eigen::PartialPivLU<CMat> lu(Bm);
  CMat rhs = CMat::Zero(n + d, n);
  rhs.topRows(n) = CMat::Identity(n, n);
  reg.S0 = lu.solve(rhs).topRows(n);
  if (!reg.S0.allFinite()) throw Error(ErrorCode::NEAR_SINGULAR, "bordered zero-energy system is singular");

  // window: largest lambda in (0, 1] with contraction <= 1/2, by log bisection
  double lo = 1e-4, hi = 1.0;
  if (s_contraction(reg, hi) <= 0.5) {
    reg.window = hi;
  } else if (s_contraction(reg, lo) > 0.5) {
    reg.window = 0.0;
  } else {
    for (int it = 0; it < 14; ++it) {
      const double mid = std::sqrt(lo * hi);
      (s_contraction(reg, mid) <= 0.5 ? lo : hi) = mid;
    }
    reg.window = lo;
  }
  return reg;
}

namespace {
CMat contraction_matrix(const RegularizedInverse& reg, double lambda) {
  const CMat B0 = R0_matrix(reg.grid, reg.model, lambda) - reg.R00;
  return reg.S0 * apply_Qt0(reg, apply_V(reg.V, B0));
}
}  // namespace

double s_contraction(const RegularizedInverse& reg, double lambda) {
  if (lambda == 0.0) return 0.0;
  return l1_norm_matrix(*reg.grid, contraction_matrix(reg, lambda));
}

double s0_identity_residual(const RegularizedInverse& reg) {
  const int n = reg.grid->size();
  CMat T0 = apply_V(reg.V, reg.R00);
  T0 += CMat::Identity(n, n);
  const CMat E = (apply_Qt0(reg, T0 * reg.S0) - CMat::Identity(n, n)) * reg.Qt0;
  return l1_norm_matrix(*reg.grid, E);
}

double s0_range_residual(const RegularizedInverse& reg) {
  if (reg.chains() == 0) return 0.0;
  const CMat P = reg.border.transpose() * reg.S0;
  double scale = 0.0;
  for (int c = 0; c < reg.chains(); ++c) scale = std::max(scale, l1_flat(*reg.grid, reg.border.col(c)));
  return P.cwiseAbs().maxCoeff() / std::max(1e-300, scale * reg.S0.cwiseAbs().maxCoeff());
}

SLambda build_S_lambda(const RegularizedInverse& reg, double lambda, SMethod method) {
  SLambda out;
  if (lambda == 0.0) {
    out.S = reg.S0;
    out.used = SMethod::NEUMANN;
    return out;
  }
  if (method == SMethod::AUTO) method = std::abs(lambda) <= reg.window ? SMethod::NEUMANN : SMethod::DIRECT;
  const Grid& g = *reg.grid;
  const int n = g.size();
  if (method == SMethod::NEUMANN) {
    const CMat M = contraction_matrix(reg, lambda);
    out.contraction = l1_norm_matrix(g, M);
    if (out.contraction >= 1.0) throw Error(ErrorCode::NO_CONTRACTION, "zero-energy Neumann series does not contract");
    CMat term = reg.S0, sum = reg.S0;
    const double s0 = l1_norm_matrix(g, reg.S0);
    for (int m = 1; m < 500; ++m) {
      term = -(M * term);
      sum += term;
      out.terms = m;
      if (l1_norm_matrix(g, term) <= 1e-15 * s0) break;
    }
    out.S = sum;
    out.used = SMethod::NEUMANN;
    return out;
  }
  const int d = reg.chains();
  CMat Tz = apply_V(reg.V, R0_matrix(reg.grid, reg.model, lambda));
  Tz += CMat::Identity(n, n);
  CMat Bm = CMat::Zero(n + d, n + d);
  Bm.topLeftCorner(n, n) = apply_Qt0(reg, Tz);
  Bm.topRightCorner(n, d) = reg.top;
  Bm.bottomLeftCorner(d, n) = reg.border.transpose();
  CMat rhs = CMat::Zero(n + d, n);
  rhs.topRows(n) = reg.Qt0;
  out.S = Eigen::PartialPivLU<CMat>(Bm).solve(rhs).topRows(n);
  if (!out.S.allFinite()) throw Error(ErrorCode::NEAR_SINGULAR, "bordered system singular");
  out.used = SMethod::DIRECT;
  return out;
}

double s_lambda_residual(const RegularizedInverse& reg, double lambda, const CMat& S) {
  const int n = reg.grid->size();
  CMat Tz = apply_V(reg.V, R0_matrix(reg.grid, reg.model, lambda));
  Tz += CMat::Identity(n, n);
  const CMat E = apply_Qt0(reg, Tz * S) - reg.Qt0;
  return l1_norm_matrix(*reg.grid, E) / std::max(1.0, l1_norm_matrix(*reg.grid, reg.Qt0));
}

std::vector<ChainResidual> chain_identity_residual(const PotentialSpec& V, GridPtr grid, const JordanBasis& basis,
                                                   double lambda, const ResolventModel& model) {
  const Grid& g = *grid;
  const cd z = energy(model, lambda);
  const CMat Vm = V.matrix();
  std::vector<ChainResidual> out;
  for (std::size_t c = 0; c < basis.chains.size(); ++c) {
    const Chain& ch = basis.chains[c];
    for (int j = 1; j <= ch.k; ++j) {
      const CVec& psi = ch.psi[j - 1];
      const CVec prev = j > 1 ? ch.psi[j - 2] : CVec::Zero(psi.size());
      CMat both(psi.size(), 2);
      both.col(0) = Vm * psi;
      both.col(1) = prev - z * psi;
      const CMat R = R0_apply(grid, model, lambda, both);
      const CVec res = psi + R.col(0) - R.col(1);
      out.push_back({static_cast<int>(c), ch.k, j, rel_l1(g, res, psi)});
    }
  }
  return out;
}

std::vector<ChainResidual> telescope_residual(const PotentialSpec& V, GridPtr grid, const JordanBasis& basis,
                                              double lambda, const ResolventModel& model) {
  const Grid& g = *grid;
  const cd z = energy(model, lambda);
  const CMat Vm = V.matrix();
  std::vector<ChainResidual> out;
  for (std::size_t c = 0; c < basis.chains.size(); ++c) {
    const Chain& ch = basis.chains[c];
    CVec s = CVec::Zero(ch.psi[0].size());
    cd zp = 1.0;
    for (int j = 1; j <= ch.k; ++j, zp *= z) s += zp * ch.psi[j - 1];
    // zp = z^k now
    CMat both(s.size(), 2);
    both.col(0) = Vm * s;
    both.col(1) = zp * ch.psi.back();
    const CMat R = R0_apply(grid, model, lambda, both);
    const CVec res = s + R.col(0) + R.col(1);
    out.push_back({static_cast<int>(c), ch.k, ch.k, rel_l1(g, res, s)});
  }
  return out;
}

namespace {
// psi_{k,k} + sum_j z^{-(k+1-j)} V psi_{j,k}
CVec pole_vector(const Chain& ch, const CMat& Vm, cd z) {
  CVec e = ch.psi.back();
  for (int j = 1; j <= ch.k; ++j) e += std::pow(z, -(ch.k + 1 - j)) * (Vm * ch.psi[j - 1]);
  return e;
}
}  // namespace

std::vector<ChainResidual> exact_inverse_residual(const PotentialSpec& V, GridPtr grid, const JordanBasis& basis,
                                                  double lambda, const ResolventModel& model) {
  if (lambda == 0.0) throw Error(ErrorCode::INVALID_ARGUMENT, "exact inverse formula needs lambda != 0");
  const Grid& g = *grid;
  const cd z = energy(model, lambda);
  const CMat Vm = V.matrix();
  std::vector<ChainResidual> out;
  for (std::size_t c = 0; c < basis.chains.size(); ++c) {
    const Chain& ch = basis.chains[c];
    const CVec e = pole_vector(ch, Vm, z);
    const CVec res = e + Vm * R0_apply(grid, model, lambda, e) - ch.psi.back();
    out.push_back({static_cast<int>(c), ch.k, ch.k, rel_l1(g, res, ch.psi.back())});
  }
  return out;
}

FormulaResult inverse_via_formula(const RegularizedInverse& reg, double lambda, const CVec& f,
                                  FormulaVariant variant) {
  if (lambda == 0.0) throw Error(ErrorCode::INVALID_ARGUMENT, "formula needs lambda != 0");
  return inverse_via_formula(reg, build_S_lambda(reg, lambda), lambda, f, variant);
}

FormulaResult inverse_via_formula(const RegularizedInverse& reg, const SLambda& S, double lambda, const CVec& f,
                                  FormulaVariant variant) {
  if (lambda == 0.0) throw Error(ErrorCode::INVALID_ARGUMENT, "formula needs lambda != 0");
  const Grid& g = *reg.grid;
  const cd z = energy(reg.model, lambda);
  const CMat Vm = reg.V.matrix();
  FormulaResult res;
  res.g = S.S * apply_Qt0(reg, f);
  res.out = res.g;
  const int d = reg.chains();
  if (d == 0) return res;
  CMat rhs(g.size(), d + 1);
  rhs.leftCols(d) = reg.top;
  rhs.col(d) = res.g;
  const CMat R = R0_apply(reg.grid, reg.model, lambda, rhs);
  const CVec Tg = res.g + Vm * R.col(d);
  for (int c = 0; c < d; ++c) {
    const Chain& ch = reg.basis.chains[c];
    res.F.push_back(bpair(g, Tg, ch.psi.front()));
    cd coeff;
    if (variant == FormulaVariant::CORRECTION) {
      coeff = bpair(g, f, ch.psi.front()) - res.F.back();
    } else {
      const CVec Rk = variant == FormulaVariant::B0_PAIRING ? CVec(R.col(c) - reg.R00 * ch.psi.back()) : CVec(R.col(c));
      coeff = std::pow(z, ch.k) * bpair(g, res.g, Rk);
      for (int i = 1; i <= ch.k; ++i) coeff += std::pow(z, i - 1) * bpair(g, f, ch.psi[i - 1]);
    }
    res.coeff.push_back(coeff);
    res.out += coeff * pole_vector(ch, Vm, z);
  }
  return res;
}

CVec dense_inverse_apply(const PotentialSpec& V, double lambda, const CVec& f, const ResolventModel& model) {
  return Eigen::PartialPivLU<CMat>(bs_matrix(V, lambda, Branch::PLUS, model)).solve(f);
}

CVec admissible_part(const JordanBasis& b, const CVec& f) {
  CVec out = f;
  for (const auto& ch : b.chains)
    for (int j = 1; j <= ch.k; ++j) out -= b.pair(ch.psi[ch.k - j], f) * ch.psi[j - 1];
  return out;
}

LowEnergyScan low_energy_scan(const RegularizedInverse& reg, const std::vector<double>& lambdas, const CVec& f) {
  const Grid& g = *reg.grid;
  LowEnergyScan scan;
  scan.K = reg.basis.K;
  const CVec fa = admissible_part(reg.basis, f);
  std::vector<double> lx, ly;
  for (double lam : lambdas) {
    LowEnergyRow row;
    row.lambda = lam;
    row.norm_admissible = l1_flat(g, inverse_via_formula(reg, lam, fa).out);
    row.norm_generic = l1_flat(g, inverse_via_formula(reg, lam, f).out);
    row.contraction = s_contraction(reg, lam);
    for (const auto& r : chain_identity_residual(reg.V, reg.grid, reg.basis, lam, reg.model))
      row.chain_res = std::max(row.chain_res, r.residual);
    for (const auto& r : telescope_residual(reg.V, reg.grid, reg.basis, lam, reg.model))
      row.telescope_res = std::max(row.telescope_res, r.residual);
    for (const auto& r : exact_inverse_residual(reg.V, reg.grid, reg.basis, lam, reg.model))
      row.exact_res = std::max(row.exact_res, r.residual);
    scan.rows.push_back(row);
    lx.push_back(std::log(std::abs(lam)));
    ly.push_back(std::log(row.norm_generic));
  }
  if (lx.size() >= 2) scan.slope_generic = linear_fit(lx, ly).slope;
  if (!scan.rows.empty()) {
    std::size_t edge = 0;
    double mx = 0.0;
    for (std::size_t i = 0; i < scan.rows.size(); ++i) {
      if (std::abs(scan.rows[i].lambda) > std::abs(scan.rows[edge].lambda)) edge = i;
      mx = std::max(mx, scan.rows[i].norm_admissible);
    }
    scan.admissible_ratio = mx / scan.rows[edge].norm_admissible;
  }
  return scan;
}

std::string low_energy_csv(const LowEnergyScan& scan) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "lambda,norm_admissible_f,norm_generic_f,contraction,residual_chain,residual_telescope,residual_exact_inverse\n";
  for (const auto& r : scan.rows)
    os << r.lambda << ',' << r.norm_admissible << ',' << r.norm_generic << ',' << r.contraction << ','
       << r.chain_res << ',' << r.telescope_res << ',' << r.exact_res << '\n';
  return os.str();
}

}  // namespace nsa
