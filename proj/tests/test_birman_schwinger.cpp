// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "nsa/potentials.hpp"

using namespace nsa;

namespace {

GridPtr radial(double L = 20.0, int M = 200) { return make_grid(GridMode::RADIAL_SWAVE, L, M); }

double rel_l1(const Grid& g, const CMat& a, const CMat& b) { return l1_norm_matrix(g, a - b) / l1_norm_matrix(g, b); }

// real part of det(I + c V R0(0)); changes sign when a zero-energy state appears
double det_sign(const PotentialSpec& V, double c) {
  const CMat M = bs_matrix(scaled(V, c), 0.0, Branch::PLUS, {ModelKind::QUADRATURE});
  Eigen::PartialPivLU<CMat> lu(M);
  const CMat& U = lu.matrixLU();
  double s = lu.permutationP().determinant();
  for (int i = 0; i < U.rows(); ++i) s *= U(i, i).real() > 0 ? 1.0 : -1.0;
  return s;
}

}  // namespace

TEST_CASE("potential composite norm") {
  auto g = radial();
  const PotentialSpec V = gaussian_well(g, 1.0, 1.0);
  CHECK(std::abs(V.composite_norm - composite_norm(V.values, V.p, V.q)) <= 1e-12 * V.composite_norm);
  CHECK(V.composite_norm == std::max(lp_norm(V.values, 1.4), lp_norm(V.values, 2.0)));
  CHECK_THROWS_AS(make_potential("bad", V.values, 1.6, 2.0), Error);
}

TEST_CASE("zero potential gives the identity") {
  auto g = radial();
  const PotentialSpec Z = zero_potential(g);
  const DenseOperator A = build_bs(Z, g, 0.7, Branch::PLUS);
  CHECK(A.matrix == CMat::Identity(g->size(), g->size()));
}

TEST_CASE("bilinear transpose swaps the two factors") {
  auto g = radial();
  const PotentialSpec V = complex_perturbed(gaussian_well(g, 1.0, 1.0), 0.3);
  const DenseOperator A = build_bs(V, g, 0.8, Branch::PLUS);
  const CMat R = build_R0(g, {0.8, Branch::PLUS}).effective();
  const CMat other = CMat::Identity(g->size(), g->size()) + R * V.values.values.asDiagonal();
  CHECK((transpose_bilinear(A).matrix - other).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("branch conjugacy of the factor") {
  auto g = radial();
  const PotentialSpec V = complex_perturbed(gaussian_well(g, 1.0, 1.0), 0.3);
  const DenseOperator P = build_bs(V, g, 1.3, Branch::PLUS);
  const DenseOperator M = build_bs(conjugated(V), g, 1.3, Branch::MINUS);
  CHECK((M.matrix - P.matrix.conjugate()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("direct inverse") {
  auto g = radial(10.0, 40);
  const InverseResult I = direct_inverse(DenseOperator::identity(g));
  CHECK(I.inv.matrix == CMat::Identity(40, 40));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  CMat m = 4.0 * CMat::Identity(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) m(i, j) += 0.1 * cd(d(rng), d(rng));
  const InverseResult r = direct_inverse(DenseOperator(g, m, OpKind::MATRIX));
  CHECK(r.residual <= 1e-10);
  CHECK(r.cond > 1.0);
}

TEST_CASE("zero-energy eigenstate makes the factor singular") {
  auto g = radial();
  const PotentialSpec E = exact_eigen(g, 2.0);
  try {
    direct_inverse(build_bs(E, g, 0.0, Branch::PLUS));
    FAIL("expected NEAR_SINGULAR");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NEAR_SINGULAR);
  }
}

TEST_CASE("high-energy decay of the squared operator") {
  auto g = radial();
  const PotentialSpec Z = zero_potential(g);
  const HighEnergyReport z = high_energy_norm_scan(Z, g, {1, 2, 4});
  for (double n : z.norms) CHECK(n == 0.0);
  CHECK(z.lambda1 == 1.0);

  const PotentialSpec V = gaussian_well(g, 1.0, 1.0);
  const std::vector<double> ls{1, 2, 4, 8, 16};
  const HighEnergyReport a = high_energy_norm_scan(V, g, ls);
  for (std::size_t i = 1; i < ls.size(); ++i) CHECK(a.norms[i] < a.norms[i - 1]);
  CHECK(a.norms.back() <= 0.5 * a.norms.front());
  const HighEnergyReport b = high_energy_norm_scan(scaled(V, 2.0), g, ls);
  CHECK(b.found);
  CHECK(b.lambda1 >= a.lambda1);
  CHECK_THROWS_AS(high_energy_norm_scan(V, g, {}), Error);
}

TEST_CASE("uniform inverse bound") {
  auto g = radial();
  std::vector<double> ls;
  for (double l = 0.5; l <= 8.0; l *= 1.25) ls.push_back(l);
  const UniformInverseReport z = uniform_inverse_scan(zero_potential(g), g, ls);
  for (double n : z.norms) CHECK(n == doctest::Approx(1.0));
  const UniformInverseReport e = uniform_inverse_scan(exact_eigen(g, 2.0), g, ls);
  CHECK(std::isfinite(e.sup));
  CHECK(e.sup > 0.0);
}

TEST_CASE("tuned coupling produces a singular point") {
  // bisect the coupling until a zero-energy state sits exactly at the threshold
  auto g = radial();
  const PotentialSpec V = gaussian_well(g, 1.0, 1.0);
  double lo = 0.5, hi = 10.0;
  REQUIRE(det_sign(V, lo) != det_sign(V, hi));
  const double slo = det_sign(V, lo);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (det_sign(V, mid) == slo ? lo : hi) = mid;
  }
  const PotentialSpec W = scaled(V, 0.5 * (lo + hi));
  try {
    uniform_inverse_scan(W, g, {0.0, 0.5, 1.0, 2.0});
    FAIL("expected NEAR_SINGULAR");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NEAR_SINGULAR);
    CHECK(std::string(err.what()).find("lambda = 0") != std::string::npos);
  }
}

TEST_CASE("local Neumann series matches the dense inverse") {
  auto g = radial();
  const PotentialSpec V = gaussian_well(g, 1.0, 1.0);
  const NeumannResult at0 = local_neumann_inverse(V, g, 1.0, 0.1, 1.0);
  const InverseResult d0 = direct_inverse(build_bs(V, g, 1.0, Branch::PLUS));
  CHECK(at0.terms == 1);
  CHECK(at0.inv.matrix == d0.inv.matrix);

  for (double lam : {1.01, 1.05, 0.95}) {
    const NeumannResult n = local_neumann_inverse(V, g, 1.0, 0.1, lam);
    REQUIRE(n.contraction < 1.0);
    const InverseResult d = direct_inverse(build_bs(V, g, lam, Branch::PLUS));
    CHECK(rel_l1(*g, n.inv.matrix, d.inv.matrix) <= 1e-8);
  }
  CHECK_THROWS_AS(local_neumann_inverse(V, g, 1.0, 0.1, 1.2), Error);
  try {
    local_neumann_inverse(scaled(V, 8.0), g, 1.0, 0.5, 1.5);
    FAIL("expected NO_CONTRACTION");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NO_CONTRACTION);
  }
}

TEST_CASE("both factorizations of the perturbed resolvent agree") {
  auto g = radial();
  const PotentialSpec V = complex_perturbed(gaussian_well(g, 1.0, 1.0), 0.3);
  const int n = g->size();
  const CMat Vd = V.values.values.asDiagonal();
  for (double lam : {0.5, 1.0, 3.0}) {
    const CMat R = build_R0(g, {lam, Branch::PLUS}).effective();
    const CMat left = (CMat::Identity(n, n) + R * Vd).partialPivLu().solve(R);
    const CMat right = R * (CMat::Identity(n, n) + Vd * R).partialPivLu().inverse();
    CHECK(rel_l1(*g, left, right) <= 1e-9);
  }
}

TEST_CASE("V R0 is controlled by the zero-energy kernel") {
  // |sin(l r<) e^{i l r>} / l| <= r<, so every scan value is bounded by the lambda = 0 value
  auto g = radial();
  const PotentialSpec V = gaussian_well(g, 1.0, 1.0);
  const int n = g->size();
  auto vr = [&](double lam) {
    return l1_norm_matrix(*g, bs_matrix(V, lam, Branch::PLUS, {ModelKind::QUADRATURE}) - CMat::Identity(n, n));
  };
  const double c0 = vr(0.0) / V.composite_norm;
  for (double lam : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) CHECK(vr(lam) / V.composite_norm <= c0 * (1 + 1e-12));
}
