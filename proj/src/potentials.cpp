// SPDX-License-Identifier: Apache-2.0
#include "nsa/potentials.hpp"

#include <cmath>
#include <numbers>

namespace nsa {

namespace {
double param(const ParamMap& p, const std::string& key, double def) {
  auto it = p.find(key);
  return it == p.end() ? def : it->second;
}

double radius(const Grid& g, int i) { return g.nodes.row(i).norm(); }
}  // namespace

PotentialSpec exact_eigen(GridPtr grid, double s) {
  if (!(s >= 2.0)) throw Error(ErrorCode::INVALID_ARGUMENT, "exact_eigen requires s >= 2");
  const Grid& g = *grid;
  const int n = g.size();
  CVec u(n);
  for (int i = 0; i < n; ++i) {
    const double r = radius(g, i);
    const double prof = std::pow(1.0 + r * r, -s);
    u(i) = g.mode == GridMode::RADIAL_SWAVE ? r * prof : prof;
  }
  const RVec Au = laplacian(g) * u.real();
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = -Au(i) / u(i).real();
  PotentialSpec V = make_potential("exact_eigen", GridFunction(grid, v));
  V.eigenfunction = u;
  return V;
}

PotentialSpec gaussian_well(GridPtr grid, double depth, double width) {
  const Grid& g = *grid;
  CVec v(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double r = radius(g, i);
    v(i) = -depth * std::exp(-r * r / (width * width));
  }
  return make_potential("gaussian_well", GridFunction(grid, v));
}

PotentialSpec complex_perturbed(const PotentialSpec& base, double gamma) {
  const Grid& g = *base.grid();
  CVec v = base.values.values;
  for (int i = 0; i < g.size(); ++i) {
    const double r = radius(g, i);
    v(i) += cd(0.0, gamma * std::exp(-0.5 * r * r));
  }
  PotentialSpec V = make_potential(base.name + "+complex", GridFunction(base.grid(), v), base.p, base.q);
  V.extra = base.extra;
  return V;
}

PotentialSpec zero_potential(GridPtr grid) { return make_potential("zero", GridFunction::zeros(grid)); }

PotentialSpec builtin_potential(const std::string& name, const ParamMap& params, GridPtr grid) {
  if (name == "zero") return zero_potential(grid);
  if (name == "exact_eigen") return exact_eigen(grid, param(params, "s", 2.0));
  if (name == "gaussian_well")
    return gaussian_well(grid, param(params, "depth", 1.0), param(params, "width", 1.0));
  if (name == "complex_well")
    return complex_perturbed(gaussian_well(grid, param(params, "depth", 6.0), param(params, "width", 1.0)),
                             param(params, "gamma", 1.0));
  if (name == "complex_perturbed") {
    const PotentialSpec base = params.count("s") ? exact_eigen(grid, param(params, "s", 2.0))
                                                 : gaussian_well(grid, param(params, "depth", 1.0),
                                                                 param(params, "width", 1.0));
    return complex_perturbed(base, param(params, "gamma", 0.3));
  }
  throw Error(ErrorCode::CONFIG, "unknown builtin potential '" + name + "'");
}

GridFunction gaussian_bump(GridPtr grid, double sigma) {
  const Grid& g = *grid;
  const double norm = std::pow(2.0 * std::numbers::pi * sigma * sigma, -1.5);
  CVec u(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double r = radius(g, i);
    const double prof = norm * std::exp(-r * r / (2.0 * sigma * sigma));
    u(i) = g.mode == GridMode::RADIAL_SWAVE ? r * prof : prof;
  }
  return GridFunction(grid, u);
}

}  // namespace nsa
