// SPDX-License-Identifier: Apache-2.0
#include "nsa/ft_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <Eigen/SparseCore>
#include <json.hpp>

#include "nsa/fit.hpp"
#include "nsa/low_energy_inverse.hpp"

namespace nsa {

namespace {

const double kPi = std::numbers::pi;

double bump_exp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

// Simpson nodes for chi on [0, 2]
struct ChiQuad {
  std::vector<double> x, w;
  ChiQuad() {
    const int m = 4000;
    const double h = 2.0 / m;
    for (int i = 0; i <= m; ++i) {
      x.push_back(i * h);
      const double c = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      w.push_back(c * h / 3.0 * chi(i * h));
    }
  }
};

const ChiQuad& chi_quad() {
  static const ChiQuad q;
  return q;
}

// chi_hat on u = -U + k du, plus its running integral X
struct ChiHatTable {
  double U = 150.0, du = 0.02;
  std::vector<double> v, X;
  double l1 = 0.0;
  ChiHatTable() {
    const int m = static_cast<int>(std::lround(2.0 * U / du));
    v.resize(m + 1);
    for (int k = 0; k <= m; ++k) v[k] = chi_hat(-U + k * du);
    X.assign(m + 1, 0.0);
    for (int k = 1; k <= m; ++k) X[k] = X[k - 1] + 0.5 * du * (v[k] + v[k - 1]);
    for (double a : v) l1 += std::abs(a) * du;
  }
  int size() const { return static_cast<int>(v.size()); }
  // X(s) = int_{-inf}^s chi_hat, 2 pi chi(0) at +inf
  double Xat(double s) const {
    if (s <= -U) return 0.0;
    if (s >= U) return X.back();
    const double q = (s + U) / du;
    const int k = std::min(static_cast<int>(q), size() - 2);
    const double a = q - k;
    return (1.0 - a) * X[k] + a * X[k + 1];
  }
  double at(double s) const {
    if (s <= -U || s >= U) return 0.0;
    const double q = (s + U) / du;
    const int k = std::min(static_cast<int>(q), size() - 2);
    const double a = q - k;
    return (1.0 - a) * v[k] + a * v[k + 1];
  }
};

const ChiHatTable& chi_table() {
  static const ChiHatTable t;
  return t;
}

// Phi(s) = int |chi_hat(u - s) - chi_hat(u)| du on s = k du, and G = int_0 Phi
struct PhiTable {
  double S = 60.0, du = 0.02;
  std::vector<double> G;
  double slope = 0.0;
  PhiTable() {
    const ChiHatTable& t = chi_table();
    du = t.du;
    const int ks = static_cast<int>(std::lround(S / du));
    const int m = t.size();
    std::vector<double> phi(ks + 1, 0.0);
    for (int k = 0; k <= ks; ++k) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j) {
        const double a = (j - k >= 0) ? t.v[j - k] : 0.0;
        acc += std::abs(a - t.v[j]);
      }
      for (int j = m; j < m + k; ++j) acc += std::abs(t.v[j - k]);
      phi[k] = acc * du;
    }
    G.assign(ks + 1, 0.0);
    for (int k = 1; k <= ks; ++k) G[k] = G[k - 1] + 0.5 * du * (phi[k] + phi[k - 1]);
    slope = 2.0 * t.l1;
  }
  double at(double s) const {
    const int ks = static_cast<int>(G.size()) - 1;
    if (s >= ks * du) return G.back() + slope * (s - ks * du);
    const double q = s / du;
    const int k = std::min(static_cast<int>(q), ks - 1);
    const double a = q - k;
    return (1.0 - a) * G[k] + a * G[k + 1];
  }
};

const PhiTable& phi_table() {
  static const PhiTable t;
  return t;
}

}  // namespace

double chi(double x) {
  const double a = std::abs(x);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  const double y = a - 1.0;
  const double p = bump_exp(1.0 - y), q = bump_exp(y);
  return p / (p + q);
}

double chi_hat(double rho) {
  const ChiQuad& q = chi_quad();
  double s = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) s += q.w[i] * std::cos(rho * q.x[i]);
  return 2.0 * s;
}

double chi_hat_l1() { return chi_table().l1; }

const char* window_name(Window w) {
  switch (w) {
    case Window::HIGH: return "HIGH";
    case Window::MID: return "MID";
    case Window::LOW: return "LOW";
    default: return "NONE";
  }
}

double window_weight(Window w, double lambda, double lambda1) {
  switch (w) {
    case Window::HIGH: return 1.0 - chi(lambda / lambda1);
    case Window::MID: return chi(lambda / lambda1) - chi(lambda * lambda1);
    case Window::LOW: return chi(lambda * lambda1);
    default: return 1.0;
  }
}

std::vector<double> window_grid(Window w, const TransformParams& p) {
  if (p.n < 8 || (p.n & (p.n - 1)) != 0) throw Error(ErrorCode::INVALID_ARGUMENT, "lambda count must be a power of two");
  double lo, hi;
  if (p.lo < p.hi) {
    lo = p.lo;
    hi = p.hi;
  } else if (w == Window::LOW) {
    hi = 2.0 / p.lambda1;
    lo = -hi;
  } else if (w == Window::MID) {
    hi = 2.0 * p.lambda1;
    lo = -hi;
  } else {
    hi = p.lambda_max;
    lo = -hi;
  }
  const double d = (hi - lo) / p.n;
  std::vector<double> out(p.n);
  for (int m = 0; m < p.n; ++m) out[m] = lo + (m + 0.5) * d;
  return out;
}

CMat windowed_samples(const PotentialSpec& V, const CVec& f, const std::vector<double>& lambdas, Window w,
                      const TransformParams& p) {
  const GridPtr grid = V.grid();
  const Grid& g = *grid;
  const int n = g.size(), m = static_cast<int>(lambdas.size());
  CMat out = CMat::Zero(n, m);
  const bool fast = p.model.kind == ModelKind::LATTICE && V.is_diagonal();
  const Eigen::SparseMatrix<cd> A = laplacian(g).cast<cd>().sparseView();
  const CMat Vm = fast ? CMat() : V.matrix();
  bool bad = false;
#pragma omp parallel for schedule(dynamic) if (default_exec() == Exec::PARALLEL)
  for (int k = 0; k < m; ++k) {
    const double lam = lambdas[k];
    const double wt = window_weight(w, lam, p.lambda1);
    if (wt == 0.0) continue;
    CVec y;
    if (fast) {
      // (I + V R0(z))^{-1} = (A - z)(A - z + V)^{-1}
      const cd z = lattice_energy(lam, p.sign, p.model.phi);
      CMat rhs(n, 1);
      rhs.col(0) = f;
      const CVec s = lattice_solve(g, z, rhs, V.values.values);
      y = A * s - z * s;
    } else if (p.model.kind == ModelKind::LATTICE) {
      const cd z = lattice_energy(lam, p.sign, p.model.phi);
      CMat M = laplacian(g).cast<cd>() + Vm;
      M.diagonal().array() -= z;
      const CVec s = Eigen::PartialPivLU<CMat>(M).solve(f);
      y = A * s - z * s;
    } else {
      y = Eigen::PartialPivLU<CMat>(bs_matrix(V, lam, p.sign, p.model)).solve(f);
    }
    if (!y.allFinite()) {
#pragma omp atomic write
      bad = true;
      continue;
    }
    out.col(k) = wt * y;
  }
  if (bad) throw Error(ErrorCode::NEAR_SINGULAR, "lambda grid hit a singular point");
  return out;
}

TransformScan t_hat_l1_scan(const PotentialSpec& V, GridPtr grid, const CVec& f, Window w, const TransformParams& p) {
  check_same_grid(grid, V.grid());
  const Grid& g = *grid;
  TransformScan s;
  s.window = w;
  s.lambdas = window_grid(w, p);
  s.n = p.n;
  s.delta_lambda = s.lambdas[1] - s.lambdas[0];
  s.f_l1 = l1_flat(g, f);
  CVec f0 = f;
  if (p.project) f0 = admissible_part(build_threshold_basis(V, grid), f);
  // zero padding refines the rho spacing without changing the lambda samples
  const int np = p.n * p.pad;
  CMat G = CMat::Zero(g.size(), np);
  G.leftCols(p.n) = windowed_samples(V, f0, s.lambdas, w, p);
  const CMat F = dft_rows(G, s.lambdas.front(), s.delta_lambda);
  const double drho = 2.0 * kPi / (np * s.delta_lambda);
  s.rho.resize(np);
  s.l1_profile.assign(np, 0.0);
  for (int q = 0; q < np; ++q) {
    s.rho[q] = (q - np / 2) * drho;
    double acc = 0.0;
    for (int i = 0; i < g.size(); ++i) acc += g.flat_w(i) * std::abs(F(i, q));
    s.l1_profile[q] = acc;
    s.total += acc * drho;
  }
  s.verdict = s.total > p.cap_factor * s.f_l1 ? "DIVERGENT" : "BOUNDED";
  return s;
}

std::string transform_csv(const TransformScan& s) {
  std::ostringstream os;
  os << std::setprecision(12) << "rho,l1_profile\n";
  for (std::size_t q = 0; q < s.rho.size(); ++q) os << s.rho[q] << ',' << s.l1_profile[q] << '\n';
  return os.str();
}

std::string transform_summary_json(const TransformScan& s) {
  nlohmann::ordered_json j;
  j["window"] = window_name(s.window);
  j["total"] = s.total;
  j["n"] = s.n;
  j["delta_lambda"] = s.delta_lambda;
  j["verdict"] = s.verdict;
  return j.dump(2) + "\n";
}

double vb_hat_constant(const PotentialSpec& V, GridPtr grid, double r) {
  const Grid& g = *grid;
  if (g.mode != GridMode::RADIAL_SWAVE) throw Error(ErrorCode::INVALID_ARGUMENT, "radial grid required");
  if (!V.is_diagonal()) throw Error(ErrorCode::INVALID_ARGUMENT, "multiplication potential required");
  if (!(r > 0.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "r must be positive");
  const PhiTable& G = phi_table();
  const int n = g.size();
  RVec av(n);
  for (int i = 0; i < n; ++i) av(i) = g.h * g.r(i) * std::abs(V.values.values(i));
  double best = 0.0;
  const int stride = std::max(1, n / 200);
#pragma omp parallel for reduction(max : best) if (default_exec() == Exec::PARALLEL)
  for (int iy = 0; iy < n; iy += stride) {
    const double y = g.r(iy);
    double acc = 0.0;
    for (int is = 0; is < n; ++is) {
      const double s = g.r(is);
      acc += av(is) * (G.at(r * (s + y)) - G.at(r * std::abs(s - y)));
    }
    best = std::max(best, acc / (2.0 * y * r));
  }
  return best;
}

VbHatReport vb_hat_bound_check(const PotentialSpec& V, GridPtr grid, double /*lambda0*/, double r0) {
  VbHatReport rep;
  std::vector<double> lx, ly;
  for (int k = 0; k < 4; ++k) {
    const double r = r0 / std::pow(2.0, k);
    rep.r.push_back(r);
    rep.constant.push_back(vb_hat_constant(V, grid, r));
    lx.push_back(std::log(r));
    ly.push_back(std::log(rep.constant.back()));
  }
  rep.exponent = linear_fit(lx, ly).slope;
  return rep;
}

K2Report k2_bound_check(GridPtr grid, const JordanBasis& basis, double r) {
  const Grid& g = *grid;
  if (basis.chains.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "empty threshold basis");
  if (g.mode != GridMode::RADIAL_SWAVE) throw Error(ErrorCode::INVALID_ARGUMENT, "radial grid required");
  if (!(r > 0.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "r must be positive");
  const ChiHatTable& T = chi_table();
  const CVec& u = basis.chains.front().psi.back();  // u = s psi(s)
  const int n = g.size();
  // rho grid covering the shifted supports
  const double span = 80.0 / r;  // chi_hat is negligible beyond |u| = 40
  const double rlo = -2.0 * g.L - span, rhi = span;
  const double drho = 0.05 / r;  // rho enters only through chi_hat(r rho / 2)
  const int nr = static_cast<int>((rhi - rlo) / drho) + 1;
  K2Report rep;
  rep.r = r;
  const int stride = std::max(1, n / 100);
  double best0 = 0.0, bestb = 0.0, bound = 0.0;
#pragma omp parallel for reduction(max : best0, bestb, bound) if (default_exec() == Exec::PARALLEL)
  for (int ix = 0; ix < n; ix += stride) {
    const double x = g.r(ix);
    cd mass = 0.0;
    double amass = 0.0;
    for (int is = 0; is < n; ++is) {
      const double s = g.r(is);
      mass += g.h * s * u(is) / std::max(x, s);
      amass += g.h * s * std::abs(u(is)) / std::max(x, s);
    }
    double i0 = 0.0, ib = 0.0;
    for (int q = 0; q < nr; ++q) {
      const double rho = rlo + q * drho;
      cd k2 = 0.0;
      for (int is = 0; is < n; ++is) {
        const double s = g.r(is);
        k2 += g.h * u(is) * (T.Xat(0.5 * r * (rho + x + s)) - T.Xat(0.5 * r * (rho + std::abs(x - s))));
      }
      k2 /= 2.0 * x;
      i0 += std::abs(k2) * drho;
      ib += std::abs(k2 - 0.5 * r * T.at(0.5 * r * rho) * mass) * drho;
    }
    best0 = std::max(best0, i0);
    bestb = std::max(bestb, ib);
    bound = std::max(bound, T.l1 * amass);
  }
  rep.r0_variant = best0;
  rep.b0_variant = bestb;
  rep.bound = bound;
  return rep;
}

DKernelReport dlambda_kernel_check(double t, const std::vector<std::pair<double, double>>& samples, int n_lambda,
                                   double lambda_cap) {
  if (t == 0.0) throw Error(ErrorCode::INVALID_ARGUMENT, "t must be nonzero");
  DKernelReport rep;
  rep.expected = 1.0 / std::sqrt(16.0 * kPi * std::abs(t));
  double cap = lambda_cap;
  if (cap <= 0.0) {
    for (const auto& [d, rho] : samples) cap = std::max(cap, std::abs(d - rho) / (2.0 * std::abs(t)));
    cap = 2.0 * cap + 40.0 / std::sqrt(std::abs(t));
  }
  const double lo = -2.0 * cap, dl = 4.0 * cap / n_lambda;
  const cd kI(0.0, 1.0);
  for (const auto& [d, rho] : samples) {
    cd acc = 0.0;
    for (int m = 0; m < n_lambda; ++m) {
      const double l = lo + (m + 0.5) * dl;
      const double c = chi(l / cap);
      if (c == 0.0) continue;
      acc += c * std::exp(kI * (-t * l * l + l * (d - rho)));
    }
    const double mod = std::abs(acc * dl * kI / (4.0 * kPi));
    rep.max_deviation = std::max(rep.max_deviation, std::abs(mod - rep.expected) / rep.expected);
  }
  return rep;
}

}  // namespace nsa
