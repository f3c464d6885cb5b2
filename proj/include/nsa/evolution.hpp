// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsa/threshold_jordan.hpp"

namespace nsa {

enum class PropMethod { EXPM_SQUARING, EIGEN_DECOMP };

// H = A + V as a MATRIX operator (complex symmetric)
DenseOperator discretize_H(const PotentialSpec& V, GridPtr grid);

// smallest k such that the free-mode expansion of f holds 99% of its weight below k
double data_kmax(GridPtr grid, const CVec& f, double fraction = 0.99);
// 0.8 L / (2 kmax)
double reflection_horizon(const Grid& g, double kmax);

struct PropagatorPlan {
  GridPtr grid;
  DenseOperator H;
  double dt = 0.05;
  int steps = 0;  // time grid t_k = k dt, k = 0..steps
  PropMethod method = PropMethod::EXPM_SQUARING;
  double T_max = 0.0;
  bool auto_horizon = false;  // T_max derived from the data rather than set explicitly
  CMat step;  // e^{-i dt H} (EXPM) or unused
  CMat evecs, evecs_inv;
  CVec evals;

  double t(int k) const { return k * dt; }
  double t_end() const { return steps * dt; }
};

// t_end <= 0 means T_max; T_max <= 0 means reflection_horizon(data_kmax(f))
PropagatorPlan make_plan(const PotentialSpec& V, GridPtr grid, const CVec& f, double t_end = 0.0, double T_max = 0.0,
                         PropMethod method = PropMethod::EXPM_SQUARING, double dt = 0.05);

// e^{-i t_k H} f for every k
std::vector<CVec> propagate(const PropagatorPlan& plan, const CVec& f);
// e^{-i t H} f for a single t (EXPM via powers of the step when t is on the grid)
CVec propagate_to(const PropagatorPlan& plan, const CVec& f, double t);

// sup of |psi| = |u| / r over r <= L/2 (box: |x|_inf <= L/2)
double inner_sup(const Grid& g, const CVec& u);
double l2_flat(const Grid& g, const CVec& u);

struct DecayReport {
  std::vector<double> t, sup_norm, l2_norm;
  double exponent = 0.0, exponent_stderr = 0.0, constant = 0.0;
  double fit_lo = 0.0, fit_hi = 0.0;
  double T_max = 0.0;
};

// P absent: no projection; fit over [t_fit_min, T_max]. With an automatic horizon the
// window also ends at the horizon of the projected data (I - P) f.
DecayReport dispersive_scan(const PropagatorPlan& plan, const CVec& f, const std::optional<DenseOperator>& P = {},
                            double t_fit_min = 2.0);

struct StabilityReport {
  std::vector<double> t, l2_norm;
  double sup_ratio = 0.0;  // sup_t |e^{-itH}(I-P)f|_2 / |f|_2
  double growth = 0.0;     // final / initial
};

StabilityReport l2_stability_scan(const PropagatorPlan& plan, const CVec& f, const std::optional<DenseOperator>& P = {});

struct StoneReport {
  double discrepancy = 0.0;  // relative sup difference
  double epsilon = 0.0;
  CVec continuum, direct;
};

// Lorentzian-regularized spectral integral over [-10 eps, lambda_cap] with eps = 4 lambda_cap / n_quad
StoneReport stone_check(const PotentialSpec& V, GridPtr grid, const CVec& f, double t, double lambda_cap, int n_quad,
                        const std::optional<DenseOperator>& P = {});

std::string decay_csv(const DecayReport& r);

}  // namespace nsa
