// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nsa/evolution.hpp"
#include "nsa/fit.hpp"
#include "nsa/potentials.hpp"

using namespace nsa;

namespace {

constexpr double kPi = std::numbers::pi;

GridPtr small() {
  static GridPtr g = make_grid(GridMode::RADIAL_SWAVE, 20.0, 200);
  return g;
}

double rel2(const CVec& a, const CVec& b) { return (a - b).norm() / b.norm(); }

// reduced free evolution of the normalized Gaussian bump of width s
CVec free_gaussian(const Grid& g, double s, double t) {
  const cd a = s * s + cd(0.0, 2.0 * t);
  const cd pref = std::pow(2.0 * kPi * s * s, -1.5) * std::pow(cd(s * s) / a, 1.5);
  CVec u(g.size());
  for (int i = 0; i < g.size(); ++i) u(i) = g.r(i) * pref * std::exp(-g.r(i) * g.r(i) / (2.0 * a));
  return u;
}

}  // namespace

TEST_CASE("free Hamiltonian spectrum") {
  auto g = small();
  const DenseOperator H = discretize_H(zero_potential(g), g);
  CHECK(H.matrix == H.matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix.real());
  // odd reflection at 0 and Neumann closure at L: sin((n - 1/2) pi r / L)
  for (int n = 1; n <= 10; ++n) {
    const double exact = std::pow((n - 0.5) * kPi / 20.0, 2);
    CHECK(std::abs(es.eigenvalues()(n - 1) - exact) <= 0.01 * exact);
  }
}

TEST_CASE("analytic null vector of the eigenvalue fixture") {
  for (int M : {200, 400}) {
    auto g = make_grid(GridMode::RADIAL_SWAVE, 20.0, M);
    const PotentialSpec V = exact_eigen(g, 2.0);
    const DenseOperator H = discretize_H(V, g);
    CHECK(H.matrix == H.matrix.transpose());
    const CVec u = *V.eigenfunction;
    CHECK((H.matrix * u).cwiseAbs().maxCoeff() <= 5.0 * g->h * g->h * u.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("propagation at time zero and unitarity") {
  auto g = small();
  const CVec f = gaussian_bump(g, 1.0).values;
  const PotentialSpec V = gaussian_well(g, 6.0, 1.0);
  for (PropMethod m : {PropMethod::EXPM_SQUARING, PropMethod::EIGEN_DECOMP}) {
    const PropagatorPlan plan = make_plan(V, g, f, 4.0, 4.0, m);
    const std::vector<CVec> us = propagate(plan, f);
    CHECK(us.front() == f);
    for (const CVec& u : us) CHECK(std::abs(u.norm() - f.norm()) <= 1e-8 * f.norm());
  }
  const PropagatorPlan plan = make_plan(V, g, f, 4.0, 4.0);
  const StabilityReport s = l2_stability_scan(plan, f);
  CHECK(s.sup_ratio == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("free evolution matches the analytic Gaussian") {
  auto g = make_grid(GridMode::RADIAL_SWAVE, 40.0, 800);
  const double s = 1.0;
  const CVec f = gaussian_bump(g, s).values;
  const PropagatorPlan plan = make_plan(zero_potential(g), g, f);
  REQUIRE(plan.T_max > 1.0);
  for (double t = 1.0; t <= plan.T_max; t += 1.0) {
    const CVec ref = free_gaussian(*g, s, t);
    const CVec got = propagate_to(plan, f, t);
    CHECK(inner_sup(*g, got - ref) <= 0.02 * inner_sup(*g, ref));
  }
}

TEST_CASE("group property") {
  auto g = small();
  const CVec f = gaussian_bump(g, 1.0).values;
  const PotentialSpec V = complex_perturbed(gaussian_well(g, 1.0, 1.0), 0.3);
  const PropagatorPlan plan = make_plan(V, g, f, 4.0, 4.0);
  for (auto [t1, t2] : {std::pair{0.5, 1.0}, std::pair{0.37, 0.81}}) {
    const CVec a = propagate_to(plan, propagate_to(plan, f, t1), t2);
    const CVec b = propagate_to(plan, f, t1 + t2);
    CHECK(rel2(a, b) <= 1e-9);
  }
}

TEST_CASE("eigendecomposition is rejected for a defective Hamiltonian") {
  auto g = small();
  const ChainFixture C = build_chain_fixture(g, {0, 1});
  const CVec f = gaussian_bump(g, 1.0).values;
  CHECK_THROWS_WITH_AS(make_plan(C.V, g, f, 4.0, 4.0, PropMethod::EIGEN_DECOMP), doctest::Contains("EIGEN_REJECTED"),
                       Error);
}

TEST_CASE("polynomial growth along a Jordan chain") {
  auto g = small();
  const ChainFixture C = build_chain_fixture(g, {0, 1});
  const JordanBasis b = build_threshold_basis(C.V, g);
  REQUIRE(b.K == 2);
  const CVec Psi = b.chains.back().psi.back();  // in X_2 but not X_1
  const PropagatorPlan plan = make_plan(C.V, g, Psi, 40.0, 40.0);
  const StabilityReport s = l2_stability_scan(plan, Psi);
  std::vector<double> x, y;
  for (std::size_t k = 0; k < s.t.size(); ++k)
    if (s.t[k] >= 4.0) {
      x.push_back(std::log(s.t[k]));
      y.push_back(std::log(s.l2_norm[k]));
    }
  CHECK(std::abs(linear_fit(x, y).slope - 1.0) <= 0.1);
}

TEST_CASE("point projector commutes with the evolution") {
  auto g = small();
  const PotentialSpec V = builtin_potential("complex_well", {}, g);
  const PppResult P = build_Ppp(V, g);
  const CVec f = gaussian_bump(g, 1.0).values;
  const PropagatorPlan plan = make_plan(V, g, f, 4.0, 4.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 3; ++trial) {
    CVec h(g->size());
    for (int i = 0; i < h.size(); ++i) h(i) = cd(nd(rng), nd(rng)) * std::exp(-g->r(i) / 2.0);
    for (double t : {0.5, 2.0}) {
      const CVec a = P.P.matrix * propagate_to(plan, h, t);
      const CVec c = propagate_to(plan, P.P.matrix * h, t);
      CHECK((a - c).norm() <= 1e-8 * propagate_to(plan, h, t).norm());
    }
  }
}

TEST_CASE("L2 stability contrast for a complex eigenvalue") {
  auto g = small();
  const PotentialSpec V = builtin_potential("complex_well", {}, g);
  const PppResult P = build_Ppp(V, g);
  REQUIRE(P.centers.size() == 1);
  CHECK(P.centers[0].imag() > 0.25);
  const CVec f = gaussian_bump(g, 1.0).values;
  const PropagatorPlan plan = make_plan(V, g, f, 10.0, 10.0);
  const StabilityReport raw = l2_stability_scan(plan, f);
  const StabilityReport proj = l2_stability_scan(plan, f, P.P);
  CHECK(raw.growth >= 10.0);
  CHECK(proj.sup_ratio <= 3.0);
  // data already in the range of the projector evolves to zero
  const CVec pf = P.P.matrix * f;
  const PropagatorPlan p2 = make_plan(V, g, pf, 4.0, 4.0);
  const StabilityReport z = l2_stability_scan(p2, pf, P.P);
  CHECK(z.sup_ratio <= 1e-8);
}

TEST_CASE("free dispersive decay exponent") {
  auto g = make_grid(GridMode::RADIAL_SWAVE, 40.0, 400);
  const CVec f = gaussian_bump(g, 1.0).values;
  const PropagatorPlan plan = make_plan(zero_potential(g), g, f);
  const DecayReport d = dispersive_scan(plan, f);
  CHECK(std::abs(d.exponent + 1.5) <= 0.1);
  CHECK(d.fit_hi / d.fit_lo >= std::sqrt(10.0));
  CHECK(d.T_max == plan.T_max);
  const std::string csv = decay_csv(d);
  CHECK(csv.rfind("t,sup_norm,l2_norm,fitted_exponent,fit_window,T_max\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(d.t.size()) + 1);
}

TEST_CASE("zero-energy eigenvalue stops the decay") {
  auto g = make_grid(GridMode::RADIAL_SWAVE, 40.0, 400);
  const PotentialSpec V = exact_eigen(g, 2.0);
  const CVec f = gaussian_bump(g, 1.0).values;
  REQUIRE(std::abs(bpair(*g, f, *V.eigenfunction)) > 0.0);
  const PropagatorPlan plan = make_plan(V, g, f);
  const DecayReport d = dispersive_scan(plan, f);
  CHECK(std::abs(d.exponent) <= 0.2);
  // the projected remainder carries higher wavenumbers, so its horizon is earlier
  const PppResult P = build_Ppp(V, g);
  const DecayReport p = dispersive_scan(plan, f, P.P, 0.5);
  CHECK(p.T_max < plan.T_max);
  CHECK(p.fit_hi == p.T_max);
  const PropagatorPlan fixed = make_plan(V, g, f, 0.0, plan.T_max);
  CHECK(dispersive_scan(fixed, f, P.P, 0.5).T_max == plan.T_max);
}

TEST_CASE("decay fit needs half a decade") {
  auto g = small();
  const CVec f = gaussian_bump(g, 1.0).values;
  const PropagatorPlan plan = make_plan(zero_potential(g), g, f, 3.0, 3.0);
  CHECK_THROWS_WITH_AS(dispersive_scan(plan, f), doctest::Contains("FIT_WINDOW"), Error);
}

TEST_CASE("spectral integral reproduces the evolution") {
  auto g = small();
  const CVec f = gaussian_bump(g, 1.0).values;
  const PotentialSpec Z = zero_potential(g);
  const StoneReport a = stone_check(Z, g, f, 1.0, 40.0, 200);
  const StoneReport b = stone_check(Z, g, f, 1.0, 40.0, 400);
  CHECK(a.discrepancy <= 0.05);
  CHECK(b.discrepancy <= a.discrepancy);
  CHECK(b.epsilon == doctest::Approx(0.5 * a.epsilon));

  // projected data: the continuum part of range(P) vanishes
  const PotentialSpec V = builtin_potential("complex_well", {}, g);
  const PppResult P = build_Ppp(V, g);
  const CVec pf = P.P.matrix * f;
  const StoneReport z = stone_check(V, g, pf, 1.0, 40.0, 200, P.P);
  CHECK(inner_sup(*g, z.continuum) <= 1e-8 * inner_sup(*g, pf));
  CHECK_THROWS_AS(stone_check(Z, g, f, 1.0, 40.0, 4), Error);
}
