// SPDX-License-Identifier: Apache-2.0
// Hot loops with an OpenMP path and a serial reference path. Both paths use
// the same per-entry / per-column summation order, so results are bitwise equal.
#pragma once

#include <functional>

#include "nsa/core_grid.hpp"

namespace nsa {

enum class Exec { SERIAL, PARALLEL };

void set_default_exec(Exec e);
Exec default_exec();

using EntryFn = std::function<cd(int, int)>;

// M(i, j) = fn(i, j), filled column by column
CMat assemble(int rows, int cols, const EntryFn& fn, Exec exec = default_exec());

// max_j sum_i w_i |E_ij| / w_j
double weighted_l1_max(const CMat& E, const RVec& w, Exec exec = default_exec());

// out(x, q) = step * sum_m exp(-i rho_q lam_m) G(x, m), lam_m = lam0 + m*step,
// rho_q = q * 2 pi / (n step) for q = -n/2 .. n/2-1 (output column q + n/2)
CMat dft_rows(const CMat& G, double lam0, double step, Exec exec = default_exec());

}  // namespace nsa
