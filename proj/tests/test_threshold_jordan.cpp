// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "nsa/potentials.hpp"
#include "nsa/threshold_jordan.hpp"

using namespace nsa;

namespace {

const cd kI(0.0, 1.0);

GridPtr radial(double L = 20.0, int M = 200) { return make_grid(GridMode::RADIAL_SWAVE, L, M); }

double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void check_certificate(const JordanBasis& b, const CMat& N, int dim, double tol) {
  const BasisCertificate c = certify(b, N, dim);
  CHECK(c.chain_residual <= tol);
  CHECK(c.pairing_error <= tol);
  CHECK(c.prop54_error <= tol);
  CHECK(c.dim_ok());
}

// smallest eigenvalue of the real symmetric A + c V
double lowest(const PotentialSpec& V, double c) {
  RMat H = laplacian(*V.grid());
  H.diagonal() += c * V.values.values.real();
  return Eigen::SelfAdjointEigenSolver<RMat>(H, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

TEST_CASE("zero nilpotent gives a bilinear-orthonormal basis") {
  const CMat N = CMat::Zero(3, 3);
  const JordanBasis b = jordan_dual_basis(N, CMat::Identity(3, 3));
  CHECK(b.K == 1);
  REQUIRE(b.L.size() == 1);
  CHECK(b.L[0] == 3);
  CHECK(max_abs(b.gram - CMat::Identity(3, 3)) < 1e-12);
  check_certificate(b, N, 3, 1e-12);
}

TEST_CASE("hand-solved two by two chain") {
  CMat N(2, 2);
  N << 1.0, kI, kI, -1.0;
  CHECK(max_abs(N * N) == 0.0);
  // the documented representative satisfies the invariants exactly
  JordanBasis ref;
  ref.K = 2;
  ref.L = {0, 1};
  ref.form = CMat::Identity(2, 2);
  Chain c;
  c.k = 2;
  CVec p1(2), p2(2);
  p1 << 1.0, kI;
  p2 << 0.5, -0.5 * kI;
  c.psi = {p1, p2};
  ref.chains = {c};
  ref.gram = ref.stacked().transpose() * ref.stacked();
  check_certificate(ref, N, 2, 0.0);

  const JordanBasis b = jordan_dual_basis(N, CMat::Identity(2, 2));
  CHECK(b.K == 2);
  CHECK(b.dim() == 2);
  check_certificate(b, N, 2, 1e-14);
}

TEST_CASE("random symmetric nilpotents pass the basis certificate") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 3), count(1, 8);
  for (int t = 0; t < 25; ++t) {
    std::vector<int> blocks;
    int dim = 0;
    const int nb = count(rng);
    for (int i = 0; i < nb; ++i) {
      const int k = len(rng);
      if (dim + k > 20) break;
      blocks.push_back(k);
      dim += k;
    }
    const CMat N = make_symmetric_nilpotent(blocks, rng);
    CHECK(max_abs(N - N.transpose()) < 1e-12);
    const JordanBasis b = jordan_dual_basis(N, CMat::Identity(dim, dim));
    check_certificate(b, N, dim, 1e-9);
    int kmax = 0;
    for (int k : blocks) kmax = std::max(kmax, k);
    CHECK(b.K == kmax);
    for (int k = 1; k <= kmax; ++k)
      CHECK(b.L[k - 1] == std::count(blocks.begin(), blocks.end(), k));
  }
}

TEST_CASE("basis construction rejects invalid input") {
  CHECK_THROWS_WITH_AS(jordan_dual_basis(CMat::Identity(3, 3), CMat::Identity(3, 3)), doctest::Contains("NOT_NILPOTENT"),
                       Error);
  CMat J = CMat::Zero(2, 2);
  J(0, 1) = 1.0;
  CHECK_THROWS_WITH_AS(jordan_dual_basis(J, CMat::Identity(2, 2)), doctest::Contains("NOT_SYMMETRIC"), Error);
  CHECK_THROWS_WITH_AS(jordan_dual_basis(CMat::Zero(2, 2), CMat::Zero(2, 2)), doctest::Contains("DEGENERATE_PAIRING"),
                       Error);
}

TEST_CASE("zero-energy null space") {
  auto g = radial();
  CHECK(nullspace_X1(zero_potential(g), g).empty());
  const PotentialSpec E = exact_eigen(g, 2.0);
  const std::vector<NullPair> x1 = nullspace_X1(E, g);
  REQUIRE(x1.size() == 1);
  const CVec& u = *E.eigenfunction;
  const double cosine = std::abs(u.dot(x1[0].Psi)) / (u.norm() * x1[0].Psi.norm());
  CHECK(cosine >= 1.0 - 1e-6);
  // bootstrap identity: Psi = -R0(0) V Psi
  const CMat R0 = lattice_R0_matrix(*g, 0.0);
  const CVec& Psi = x1[0].Psi;
  CHECK((Psi + R0 * (E.values.values.asDiagonal() * Psi)).cwiseAbs().maxCoeff() <= 1e-8 * Psi.cwiseAbs().maxCoeff());
}

TEST_CASE("critical coupling produces a resonance") {
  auto g = radial();
  const PotentialSpec V = gaussian_well(g, 1.0, 1.0);
  double lo = 0.5, hi = 10.0;
  REQUIRE(lowest(V, lo) > 0.0);
  REQUIRE(lowest(V, hi) < 0.0);
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lowest(V, mid) > 0.0 ? lo : hi) = mid;
  }
  const PotentialSpec W = scaled(V, 0.5 * (lo + hi));
  const std::vector<NullPair> x1 = nullspace_X1(W, g);
  REQUIRE(x1.size() == 1);
  const StateClass sc = classify_state(GridFunction(g, x1[0].Psi), 1e-2, true);
  CHECK(sc.verdict == Verdict::RESONANCE);
}

TEST_CASE("state classification by the tail fit") {
  auto g = radial(20.0, 400);
  const int n = g->size();
  CVec a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a(i) = std::pow(1.0 + g->r(i) * g->r(i), -2.0);
    b(i) = 1.0 / (1.0 + g->r(i));
  }
  const StateClass sa = classify_state(GridFunction(g, a));
  CHECK(sa.verdict == Verdict::EIGENVALUE);
  CHECK(std::abs(sa.c0) < 1e-3);
  CHECK(sa.l1 > 0.0);
  CHECK(sa.l2 > 0.0);
  const StateClass sb = classify_state(GridFunction(g, b));
  CHECK(sb.verdict == Verdict::RESONANCE);
  CHECK(sb.c0 == doctest::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_WITH_AS(classify_state(GridFunction::zeros(g)), doctest::Contains("ZERO_VECTOR"), Error);
}

TEST_CASE("filtration") {
  auto g = radial();
  CHECK(build_filtration(zero_potential(g), g).K() == 0);
  const Filtration e = build_filtration(exact_eigen(g, 2.0), g);
  CHECK(e.dims == std::vector<int>{1});
  const ChainFixture fx = build_chain_fixture(g, {0, 1});
  const Filtration f = build_filtration(fx.V, g);
  CHECK(f.dims == std::vector<int>{1, 2});
  for (std::size_t k = 1; k < f.dims.size(); ++k) CHECK(f.dims[k] >= f.dims[k - 1]);
}

TEST_CASE("threshold basis") {
  auto g = radial();
  CHECK(build_threshold_basis(zero_potential(g), g).dim() == 0);

  const PotentialSpec E = exact_eigen(g, 2.0);
  const JordanBasis b = build_threshold_basis(E, g);
  CHECK(b.K == 1);
  REQUIRE(b.dim() == 1);
  const CVec& psi = b.chains[0].psi[0];
  CHECK(std::abs(bilinear_pair(GridFunction(g, psi), GridFunction(g, psi)) - 1.0) < 1e-10);
  check_certificate(b, hamiltonian_matrix(E), 1, 1e-6);

  const ChainFixture fx = build_chain_fixture(g, {0, 1});
  const JordanBasis c = build_threshold_basis(fx.V, g);
  CHECK(c.K == 2);
  check_certificate(c, hamiltonian_matrix(fx.V), 2, 1e-6);
}

TEST_CASE("projections on the empty basis") {
  auto g = radial();
  const JordanBasis b = build_threshold_basis(zero_potential(g), g);
  CHECK(max_abs(build_P0(b).matrix) == 0.0);
  CHECK(build_Qtilde0(b).matrix == CMat::Identity(g->size(), g->size()));
}

TEST_CASE("projection algebra") {
  auto g = radial();
  const int n = g->size();
  const PotentialSpec E = exact_eigen(g, 2.0);
  const ChainFixture fx = build_chain_fixture(g, {0, 1});
  for (const PotentialSpec* V : {&E, &fx.V}) {
    const JordanBasis b = build_threshold_basis(*V, g);
    const CMat P0 = build_P0(b).matrix, Pt = build_Ptilde0(b).matrix, Qt = build_Qtilde0(b).matrix;
    CHECK(l1_norm_matrix(*g, P0 * P0 - P0) <= 1e-9);
    CHECK(l1_norm_matrix(*g, Pt * Pt - Pt) <= 1e-9);
    CHECK(l1_norm_matrix(*g, Pt * P0 - Pt) <= 1e-9);
    CHECK(l1_norm_matrix(*g, Qt * Pt) <= 1e-9);
    CHECK(std::abs(P0.trace() - double(b.dim())) < 1e-9);
    // range and corange are the threshold space
    const CMat S = b.stacked();
    CHECK(max_abs(P0 * S - S) <= 1e-9 * max_abs(S));
    const CMat Pt_T = transpose_bilinear(DenseOperator(g, P0, OpKind::MATRIX)).matrix;
    CHECK(max_abs(Pt_T * S - S) <= 1e-9 * max_abs(S));
    // commutes with H on the threshold space and on its complement
    const CMat H = hamiltonian_matrix(*V);
    const CMat C = H * P0 - P0 * H;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    CMat T(n, 4);
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < n; ++i) T(i, j) = cd(nd(rng), nd(rng)) * std::exp(-g->r(i));
    CMat probe(n, S.cols() + 4);
    probe << S, T;
    CHECK(max_abs(C * probe) <= 1e-6 * max_abs(H * probe));
  }
}

TEST_CASE("rank-one projector for the eigenvalue-only case") {
  auto g = radial();
  const PotentialSpec E = exact_eigen(g, 2.0);
  const JordanBasis b = build_threshold_basis(E, g);
  const CVec& psi = b.chains[0].psi[0];
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  CVec f(g->size());
  for (int i = 0; i < f.size(); ++i) f(i) = cd(nd(rng), nd(rng));
  const CVec expect = bpair(*g, f, psi) * psi;
  CHECK((build_P0(b).matrix * f - expect).cwiseAbs().maxCoeff() < 1e-12 * expect.cwiseAbs().maxCoeff());
}

TEST_CASE("point-spectrum projection") {
  auto g = radial(20.0, 200);
  const int n = g->size();
  CHECK(max_abs(build_Ppp(zero_potential(g), g).P.matrix) == 0.0);

  // real well with one bound state: compare with the symmetric eigensolver
  const PotentialSpec W = gaussian_well(g, 6.0, 1.0);
  const PppResult r = build_Ppp(W, g);
  REQUIRE(r.centers.size() == 1);
  Eigen::SelfAdjointEigenSolver<RMat> es(hamiltonian_matrix(W).real());
  CHECK(es.eigenvalues()(0) < 0.0);
  CHECK(es.eigenvalues()(1) > 0.0);
  const RVec v = es.eigenvectors().col(0);
  const RMat Ph = v * v.transpose();
  CHECK(max_abs(r.P.matrix - Ph.cast<cd>()) <= 1e-8);

  // complex well
  const PotentialSpec C = builtin_potential("complex_well", {}, g);
  const PppResult c = build_Ppp(C, g);
  REQUIRE(!c.centers.empty());
  const CMat& P = c.P.matrix;
  CHECK(l1_norm_matrix(*g, P * P - P) <= 1e-8);
  CHECK(std::abs(P.trace() - double(c.parts.size())) < 1e-8);
  const CMat H = hamiltonian_matrix(C);
  CHECK(max_abs(H * P - P * H) <= 1e-8 * H.operatorNorm());
  for (std::size_t a = 0; a < c.parts.size(); ++a)
    for (std::size_t b = 0; b < c.parts.size(); ++b)
      if (a != b) CHECK(max_abs(c.parts[a].matrix * c.parts[b].matrix) <= 1e-8);

  // zero-energy eigenstate plus a bound state: the zero part is P0 and orthogonal to the rest
  const PotentialSpec E = exact_eigen(g, 2.0);
  const PppResult e = build_Ppp(E, g);
  REQUIRE(!e.parts.empty());
  CHECK(e.centers.back() == cd(0.0));
  CHECK(l1_norm_matrix(*g, e.P.matrix * e.P.matrix - e.P.matrix) <= 1e-8);
  (void)n;
}

TEST_CASE("chain fixtures") {
  auto g = radial();
  const ChainFixture one = build_chain_fixture(g, {1});
  const CMat H1 = hamiltonian_matrix(one.V);
  CHECK(kernel_staircase(H1, 2) == std::vector<int>{1, 1});
  CHECK(max_abs(*one.V.extra - one.V.extra->transpose()) == 0.0);
  const ChainFixture two = build_chain_fixture(g, {0, 1});
  CHECK(kernel_staircase(hamiltonian_matrix(two.V), 3) == std::vector<int>{1, 2, 2});
  const ChainFixture mixed = build_chain_fixture(g, {1, 1});
  CHECK(kernel_staircase(hamiltonian_matrix(mixed.V), 3) == std::vector<int>{2, 3, 3});
  CHECK_THROWS_AS(build_chain_fixture(g, std::vector<int>(60, 1)), Error);
  CHECK_THROWS_AS(build_chain_fixture(g, {}), Error);
}

TEST_CASE("threshold report") {
  auto g = radial(20.0, 400);
  const ThresholdReport r = threshold_report(exact_eigen(g, 2.0), g);
  CHECK(r.dims == std::vector<int>{1});
  REQUIRE(r.verdicts.size() == 1);
  CHECK(r.verdicts[0] == Verdict::EIGENVALUE);
  CHECK(r.L == 20.0);
  CHECK(r.M == 400);
  const ThresholdReport w = threshold_report(gaussian_well(g, 1.0, 1.0), g);
  CHECK(w.dims.empty());
}
