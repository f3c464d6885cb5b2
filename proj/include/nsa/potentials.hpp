// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "nsa/birman_schwinger.hpp"

namespace nsa {

using ParamMap = std::map<std::string, double>;

// V = -(A u)/u for u = r (1+r^2)^{-s}: u is an exact null vector of the discrete H
PotentialSpec exact_eigen(GridPtr grid, double s = 2.0);
PotentialSpec gaussian_well(GridPtr grid, double depth, double width);
PotentialSpec complex_perturbed(const PotentialSpec& base, double gamma);
PotentialSpec zero_potential(GridPtr grid);

// names: zero, exact_eigen(s), gaussian_well(depth, width),
// complex_well(depth, width, gamma), complex_perturbed(base params + gamma)
PotentialSpec builtin_potential(const std::string& name, const ParamMap& params, GridPtr grid);

// L1-normalized Gaussian profile exp(-r^2/(2 sigma^2)) / (2 pi sigma^2)^{3/2}, as reduced samples u = r psi
GridFunction gaussian_bump(GridPtr grid, double sigma);

}  // namespace nsa
