// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "nsa/kernels.hpp"
#include "nsa/threshold_jordan.hpp"

namespace nsa {

// smooth plateau cutoff: 1 on |x| <= 1, 0 on |x| >= 2
double chi(double x);
// chi_hat(rho) = int chi(l) e^{-i rho l} dl (real, even)
double chi_hat(double rho);
// int |chi_hat|
double chi_hat_l1();

enum class Window { HIGH, MID, LOW, NONE };
const char* window_name(Window w);

// cutoff weight of a window at lambda; lambda1 > 1 and r = 1 / lambda1
double window_weight(Window w, double lambda, double lambda1);

struct TransformParams {
  int n = 256;               // lambda samples (power of two)
  int pad = 8;               // zero-padding factor of the transform
  double lambda1 = 2.0;      // high / mid split; low scale r = 1 / lambda1
  double lambda_max = 8.0;   // half-extent of the HIGH / NONE grid
  double lo = 0.0, hi = 0.0; // explicit grid [lo, hi) when lo < hi
  bool project = false;      // replace f by (I - P0) f
  double cap_factor = 1e3;   // DIVERGENT when total > cap_factor |f|_1
  Branch sign = Branch::PLUS;
  ResolventModel model{};
};

struct TransformScan {
  Window window = Window::NONE;
  std::vector<double> lambdas;
  double delta_lambda = 0.0;
  int n = 0;
  std::vector<double> rho;
  std::vector<double> l1_profile;  // int |K_hat(rho, x)| dx
  double total = 0.0;              // int int |K_hat| dx drho
  double f_l1 = 0.0;
  std::string verdict;             // BOUNDED or DIVERGENT
};

// uniform grid for a window: LOW covers |lambda| < 2r, MID |lambda| < 2 lambda1, else lambda_max
std::vector<double> window_grid(Window w, const TransformParams& p);

// samples (I + V R0(z))^{-1} f times the window weight, one column per lambda
CMat windowed_samples(const PotentialSpec& V, const CVec& f, const std::vector<double>& lambdas, Window w,
                      const TransformParams& p);

TransformScan t_hat_l1_scan(const PotentialSpec& V, GridPtr grid, const CVec& f, Window w,
                            const TransformParams& p = {});

std::string transform_csv(const TransformScan& s);
std::string transform_summary_json(const TransformScan& s);

struct VbHatReport {
  std::vector<double> r;
  std::vector<double> constant;  // sup_y int int |K_hat| dx drho
  double exponent = 0.0;         // fitted r-exponent
};

// radial reduction of the local kernel bound for r in {r0, r0/2, r0/4, r0/8}
VbHatReport vb_hat_bound_check(const PotentialSpec& V, GridPtr grid, double lambda0, double r0);
double vb_hat_constant(const PotentialSpec& V, GridPtr grid, double r);

struct K2Report {
  double r = 0.0;
  double r0_variant = 0.0;  // sup_x int |K2| drho
  double b0_variant = 0.0;
  double bound = 0.0;       // |chi_hat|_1 sup_x sum h s^2 |psi| / max(x, s)
};

// uses the top vector of the first chain of the basis
K2Report k2_bound_check(GridPtr grid, const JordanBasis& basis, double r);

struct DKernelReport {
  double max_deviation = 0.0;  // max relative deviation of the modulus from (16 pi |t|)^{-1/2}
  double expected = 0.0;
};

// quadrature of e^{-i t l^2} d/dl[e^{i l d} / (4 pi d)] e^{-i rho l} against the closed form modulus
DKernelReport dlambda_kernel_check(double t, const std::vector<std::pair<double, double>>& samples, int n_lambda = 1 << 14,
                                   double lambda_cap = 0.0);

}  // namespace nsa
