// SPDX-License-Identifier: Apache-2.0
#include "nsa/evolution.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "nsa/fit.hpp"

namespace nsa {

namespace {
const cd kI(0.0, 1.0);
}

DenseOperator discretize_H(const PotentialSpec& V, GridPtr grid) {
  check_same_grid(grid, V.grid());
  return DenseOperator(grid, hamiltonian_matrix(V), OpKind::MATRIX);
}

double data_kmax(GridPtr grid, const CVec& f, double fraction) {
  const Grid& g = *grid;
  if (g.mode == GridMode::BOX3D) return std::numbers::pi / g.h;
  const int n = g.size();
  RVec w(n);
  double total = 0.0;
  for (int m = 0; m < n; ++m) {
    const double k = (m + 0.5) * std::numbers::pi / g.L;
    cd c = 0.0;
    for (int i = 0; i < n; ++i) c += g.h * f(i) * std::sin(k * g.r(i));
    w(m) = std::norm(c);
    total += w(m);
  }
  if (total == 0.0) throw Error(ErrorCode::ZERO_VECTOR, "data vanishes");
  double acc = 0.0;
  for (int m = 0; m < n; ++m) {
    acc += w(m);
    if (acc >= fraction * total) return (m + 0.5) * std::numbers::pi / g.L;
  }
  return (n - 0.5) * std::numbers::pi / g.L;
}

double reflection_horizon(const Grid& g, double kmax) { return 0.8 * g.L / (2.0 * kmax); }

PropagatorPlan make_plan(const PotentialSpec& V, GridPtr grid, const CVec& f, double t_end, double T_max,
                         PropMethod method, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "time step must be positive");
  PropagatorPlan p;
  p.grid = grid;
  p.H = discretize_H(V, grid);
  p.dt = dt;
  p.method = method;
  p.auto_horizon = !(T_max > 0.0);
  p.T_max = p.auto_horizon ? reflection_horizon(*grid, data_kmax(grid, f)) : T_max;
  const double te = t_end > 0.0 ? t_end : p.T_max;
  p.steps = static_cast<int>(std::ceil(te / dt - 1e-9));
  const CMat& H = p.H.matrix;
  if (method == PropMethod::EXPM_SQUARING) {
    const CMat X = (-kI * dt) * H;
    p.step = X.exp();
  } else {
    const bool herm = (H - H.adjoint()).cwiseAbs().maxCoeff() == 0.0;
    if (herm) {
      Eigen::SelfAdjointEigenSolver<CMat> es(H);
      p.evals = es.eigenvalues().cast<cd>();
      p.evecs = es.eigenvectors();
      p.evecs_inv = p.evecs.adjoint();
    } else {
      Eigen::ComplexEigenSolver<CMat> es(H);
      p.evals = es.eigenvalues();
      p.evecs = es.eigenvectors();
      Eigen::JacobiSVD<CMat> svd(p.evecs);
      const RVec& s = svd.singularValues();
      const double cond = s(0) / s(s.size() - 1);
      if (!(cond <= 1e6)) throw Error(ErrorCode::EIGEN_REJECTED, "eigenvector basis too ill-conditioned");
      p.evecs_inv = Eigen::PartialPivLU<CMat>(p.evecs).inverse();
    }
  }
  return p;
}

std::vector<CVec> propagate(const PropagatorPlan& plan, const CVec& f) {
  std::vector<CVec> out;
  out.reserve(plan.steps + 1);
  if (plan.method == PropMethod::EXPM_SQUARING) {
    CVec v = f;
    out.push_back(v);
    for (int k = 1; k <= plan.steps; ++k) {
      v = plan.step * v;
      out.push_back(v);
    }
  } else {
    const CVec c = plan.evecs_inv * f;
    out.push_back(f);
    for (int k = 1; k <= plan.steps; ++k) {
      const CVec ph = (-kI * plan.t(k) * plan.evals.array()).exp().matrix();
      out.push_back(plan.evecs * (ph.array() * c.array()).matrix());
    }
  }
  return out;
}

CVec propagate_to(const PropagatorPlan& plan, const CVec& f, double t) {
  if (plan.method == PropMethod::EIGEN_DECOMP) {
    const CVec c = plan.evecs_inv * f;
    const CVec ph = (-kI * t * plan.evals.array()).exp().matrix();
    return plan.evecs * (ph.array() * c.array()).matrix();
  }
  const double q = t / plan.dt;
  const long k = std::lround(q);
  CVec v = f;
  if (std::abs(q - k) <= 1e-9 * std::max(1.0, q)) {
    for (long m = 0; m < k; ++m) v = plan.step * v;
    return v;
  }
  const CMat X = (-kI * t) * plan.H.matrix;
  return X.exp() * f;
}

double inner_sup(const Grid& g, const CVec& u) {
  double s = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    if (g.mode == GridMode::RADIAL_SWAVE) {
      if (g.r(i) <= 0.5 * g.L) s = std::max(s, std::abs(u(i)) / g.r(i));
    } else if (g.nodes.row(i).cwiseAbs().maxCoeff() <= 0.5 * g.L) {
      s = std::max(s, std::abs(u(i)));
    }
  }
  return s;
}

double l2_flat(const Grid& g, const CVec& u) {
  return std::sqrt((g.flat_w.array() * u.array().abs2()).sum());
}

namespace {
CVec project_out(const std::optional<DenseOperator>& P, const CVec& f) {
  if (!P) return f;
  return f - P->effective() * f;
}
}  // namespace

DecayReport dispersive_scan(const PropagatorPlan& plan, const CVec& f, const std::optional<DenseOperator>& P,
                            double t_fit_min) {
  const Grid& g = *plan.grid;
  DecayReport rep;
  const CVec f0 = project_out(P, f);
  rep.T_max = plan.T_max;
  // projection removes the smooth part of f; what remains travels faster
  if (P && plan.auto_horizon) rep.T_max = std::min(rep.T_max, reflection_horizon(g, data_kmax(plan.grid, f0)));
  rep.fit_lo = t_fit_min;
  rep.fit_hi = std::min(rep.T_max, plan.t_end());
  if (rep.fit_hi < std::sqrt(10.0) * rep.fit_lo)
    throw Error(ErrorCode::FIT_WINDOW, "decay fit window shorter than half a decade");
  const std::vector<CVec> us = propagate(plan, f0);
  std::vector<double> lx, ly;
  for (int k = 0; k <= plan.steps; ++k) {
    const double t = plan.t(k);
    rep.t.push_back(t);
    rep.sup_norm.push_back(inner_sup(g, us[k]));
    rep.l2_norm.push_back(l2_flat(g, us[k]));
    if (t >= rep.fit_lo - 1e-12 && t <= rep.fit_hi + 1e-12) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(rep.sup_norm.back()));
    }
  }
  const LineFit fit = linear_fit(lx, ly);
  rep.exponent = fit.slope;
  rep.exponent_stderr = fit.slope_stderr;
  rep.constant = std::exp(fit.intercept);
  return rep;
}

StabilityReport l2_stability_scan(const PropagatorPlan& plan, const CVec& f, const std::optional<DenseOperator>& P) {
  const Grid& g = *plan.grid;
  StabilityReport rep;
  const double n0 = l2_flat(g, f);
  if (n0 == 0.0) throw Error(ErrorCode::ZERO_VECTOR, "data vanishes");
  const std::vector<CVec> us = propagate(plan, project_out(P, f));
  for (int k = 0; k <= plan.steps; ++k) {
    rep.t.push_back(plan.t(k));
    rep.l2_norm.push_back(l2_flat(g, us[k]));
    rep.sup_ratio = std::max(rep.sup_ratio, rep.l2_norm.back() / n0);
  }
  rep.growth = rep.l2_norm.front() > 0.0 ? rep.l2_norm.back() / rep.l2_norm.front() : 0.0;
  return rep;
}

StoneReport stone_check(const PotentialSpec& V, GridPtr grid, const CVec& f, double t, double lambda_cap, int n_quad,
                        const std::optional<DenseOperator>& P) {
  check_same_grid(grid, V.grid());
  if (n_quad < 8 || !(lambda_cap > 0.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "need n_quad >= 8 and a positive cap");
  const Grid& g = *grid;
  const int n = g.size();
  StoneReport rep;
  const double eps = 4.0 * lambda_cap / n_quad;
  rep.epsilon = eps;
  const double lo = -10.0 * eps, dE = (lambda_cap - lo) / n_quad;
  const CVec f0 = project_out(P, f);
  CMat H;
  if (!V.is_diagonal()) H = hamiltonian_matrix(V);
  CVec acc = CVec::Zero(n);
  for (int q = 0; q < n_quad; ++q) {
    const double E = lo + (q + 0.5) * dE;
    CMat rhs(n, 1);
    rhs.col(0) = f0;
    CVec rp, rm;
    if (V.is_diagonal()) {
      rp = lattice_solve(g, cd(E, eps), rhs, V.values.values);
      rm = lattice_solve(g, cd(E, -eps), rhs, V.values.values);
    } else {
      CMat Hz = H;
      Hz.diagonal().array() -= cd(E, eps);
      rp = Eigen::PartialPivLU<CMat>(Hz).solve(f0);
      Hz.diagonal().array() += cd(0.0, 2.0 * eps);
      rm = Eigen::PartialPivLU<CMat>(Hz).solve(f0);
    }
    acc += std::exp(-kI * (t * E)) * (rp - rm) * dE;
  }
  // the Lorentzian smoothing multiplies the evolution by e^{-eps t}
  rep.continuum = acc / (2.0 * std::numbers::pi * kI) * std::exp(eps * t);
  const CMat X = (-kI * t) * hamiltonian_matrix(V);
  rep.direct = X.exp() * f0;
  const double ref = inner_sup(g, rep.direct);
  rep.discrepancy = inner_sup(g, rep.continuum - rep.direct) / (ref > 0.0 ? ref : 1.0);
  return rep;
}

std::string decay_csv(const DecayReport& r) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "t,sup_norm,l2_norm,fitted_exponent,fit_window,T_max\n";
  for (std::size_t k = 0; k < r.t.size(); ++k)
    os << r.t[k] << ',' << r.sup_norm[k] << ',' << r.l2_norm[k] << ',' << r.exponent << ",[" << r.fit_lo << ";"
       << r.fit_hi << "]," << r.T_max << '\n';
  return os.str();
}

}  // namespace nsa
