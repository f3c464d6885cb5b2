// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "nsa/ft_diagnostics.hpp"
#include "nsa/fit.hpp"
#include "nsa/low_energy_inverse.hpp"
#include "nsa/potentials.hpp"

using namespace nsa;

namespace {

constexpr double kPi = std::numbers::pi;

GridPtr grid() {
  static GridPtr g = make_grid(GridMode::RADIAL_SWAVE, 20.0, 200);
  return g;
}

CVec unit_bump() {
  CVec f = gaussian_bump(grid(), 1.0).values;
  return f / l1_flat(*grid(), f);
}

}  // namespace

TEST_CASE("plateau cutoff and its transform") {
  for (double x : {-1.0, -0.5, 0.0, 0.7, 1.0}) CHECK(chi(x) == 1.0);
  for (double x : {-3.0, -2.0, 2.0, 5.0}) CHECK(chi(x) == 0.0);
  for (double x = 1.0; x < 2.0; x += 0.05) CHECK(chi(x + 0.05) <= chi(x));
  CHECK(chi(1.5) == doctest::Approx(chi(-1.5)));
  // the transform at zero is the area under the cutoff; by symmetry of the ramp that is 3
  CHECK(chi_hat(0.0) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(chi_hat(2.3) == doctest::Approx(chi_hat(-2.3)));
  CHECK(chi_hat_l1() >= chi_hat(0.0));
}

TEST_CASE("windows partition unity") {
  for (double lam = -10.0; lam <= 10.0; lam += 0.01) {
    const double s = window_weight(Window::HIGH, lam, 2.0) + window_weight(Window::MID, lam, 2.0) +
                     window_weight(Window::LOW, lam, 2.0);
    CHECK(std::abs(s - 1.0) <= 1e-14);
  }
  // the windowed samples add up to the uncut family
  const PotentialSpec V = gaussian_well(grid(), 1.0, 1.0);
  TransformParams p;
  p.n = 64;
  p.lo = -6.0;
  p.hi = 6.0;
  const std::vector<double> ls = window_grid(Window::NONE, p);
  const CVec f = unit_bump();
  const CMat all = windowed_samples(V, f, ls, Window::NONE, p);
  const CMat sum = windowed_samples(V, f, ls, Window::HIGH, p) + windowed_samples(V, f, ls, Window::MID, p) +
                   windowed_samples(V, f, ls, Window::LOW, p);
  CHECK((sum - all).cwiseAbs().maxCoeff() <= 1e-10 * all.cwiseAbs().maxCoeff());
  CHECK_THROWS_AS(window_grid(Window::LOW, TransformParams{.n = 100}), Error);
}

TEST_CASE("discrete transform concentrates a pure phase") {
  const int n = 256, pad = 8;
  const double lo = -2.0, step = 4.0 / n, a = 3.0;
  CMat G = CMat::Zero(1, n * pad);
  for (int m = 0; m < n; ++m) {
    const double lam = lo + m * step;
    G(0, m) = std::exp(cd(0.0, a * lam)) * chi(lam);
  }
  const CMat F = dft_rows(G, lo, step);
  const double drho = 2.0 * kPi / (n * pad * step), width = 4.0 * 2.0 * kPi / (n * step);
  double near = 0.0, total = 0.0;
  for (int q = 0; q < n * pad; ++q) {
    const double rho = (q - n * pad / 2) * drho, m = std::abs(F(0, q));
    total += m;
    if (std::abs(rho - a) <= width) near += m;
  }
  CHECK(near >= 0.9 * total);
}

TEST_CASE("free family transforms to the cutoff transform") {
  const CVec f = unit_bump();
  const TransformScan s = t_hat_l1_scan(zero_potential(grid()), grid(), f, Window::LOW);
  CHECK(s.total == doctest::Approx(chi_hat_l1() * s.f_l1).epsilon(0.01));
  CHECK(s.verdict == "BOUNDED");
  CHECK(s.n == 256);
  CHECK(s.rho.size() == s.l1_profile.size());
}

TEST_CASE("low window dichotomy for a zero-energy eigenvalue") {
  const PotentialSpec E = exact_eigen(grid(), 2.0);
  const CVec f = unit_bump();
  std::vector<double> adm, gen;
  for (int n : {64, 128, 256}) {
    TransformParams p;
    p.n = n;
    p.project = true;
    const TransformScan a = t_hat_l1_scan(E, grid(), f, Window::LOW, p);
    CHECK(a.verdict == "BOUNDED");
    adm.push_back(a.total);
    p.project = false;
    const TransformScan b = t_hat_l1_scan(E, grid(), f, Window::LOW, p);
    gen.push_back(b.total);
  }
  for (std::size_t i = 1; i < adm.size(); ++i) {
    CHECK(std::abs(adm[i] - adm[i - 1]) <= 1e-3 * adm[i]);
    CHECK(gen[i] > 2.0 * gen[i - 1]);
  }
  TransformParams p;
  p.n = 256;
  CHECK(t_hat_l1_scan(E, grid(), f, Window::LOW, p).verdict == "DIVERGENT");
}

TEST_CASE("high and mid windows stay bounded") {
  const PotentialSpec V = gaussian_well(grid(), 1.0, 1.0);
  const CVec f = unit_bump();
  for (Window w : {Window::HIGH, Window::MID}) {
    TransformParams p;
    p.n = 128;
    const TransformScan s = t_hat_l1_scan(V, grid(), f, w, p);
    CHECK(s.verdict == "BOUNDED");
    CHECK(std::isfinite(s.total));
    CHECK(s.window == w);
  }
}

TEST_CASE("conjugate symmetry of the two branches") {
  const PotentialSpec V = complex_perturbed(gaussian_well(grid(), 1.0, 1.0), 0.3);
  CVec f = unit_bump();
  f *= cd(1.0, 0.5);
  TransformParams p;
  p.n = 64;
  const std::vector<double> ls = window_grid(Window::MID, p);
  const CMat plus = windowed_samples(V, f, ls, Window::MID, p);
  TransformParams m = p;
  m.sign = Branch::MINUS;
  const CMat minus = windowed_samples(conjugated(V), f.conjugate(), ls, Window::MID, m);
  CHECK((minus - plus.conjugate()).cwiseAbs().maxCoeff() <= 1e-10 * plus.cwiseAbs().maxCoeff());
  const TransformScan a = t_hat_l1_scan(V, grid(), f, Window::MID, p);
  const TransformScan b = t_hat_l1_scan(conjugated(V), grid(), f.conjugate(), Window::MID, m);
  CHECK(a.total == doctest::Approx(b.total).epsilon(1e-8));
}

TEST_CASE("local kernel bound scales with r and with the potential") {
  const PotentialSpec V = gaussian_well(grid(), 1.0, 1.0);
  const VbHatReport a = vb_hat_bound_check(V, grid(), 1.0, 0.5);
  REQUIRE(a.r.size() == 4);
  for (std::size_t i = 1; i < a.r.size(); ++i) CHECK(a.constant[i] < a.constant[i - 1]);
  CHECK(a.exponent >= 1.0 / 7.0 - 0.1);
  const double c1 = vb_hat_constant(V, grid(), 0.25), c2 = vb_hat_constant(scaled(V, 2.0), grid(), 0.25);
  CHECK(c2 / c1 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("threshold kernel bounds") {
  const PotentialSpec E = exact_eigen(grid(), 2.0);
  const JordanBasis b = build_threshold_basis(E, grid());
  std::vector<double> x, y, r0;
  for (double r : {0.25, 0.125, 0.0625}) {
    const K2Report k = k2_bound_check(grid(), b, r);
    CHECK(k.r0_variant <= k.bound * (1 + 1e-9));
    r0.push_back(k.r0_variant);
    x.push_back(std::log(r));
    y.push_back(std::log(k.b0_variant));
  }
  for (std::size_t i = 1; i < r0.size(); ++i) CHECK(std::abs(r0[i] - r0[i - 1]) <= 0.1 * r0[i - 1]);
  CHECK(linear_fit(x, y).slope >= 0.9);
  CHECK_THROWS_AS(k2_bound_check(grid(), JordanBasis{}, 0.25), Error);
}

TEST_CASE("derivative kernel transform has constant modulus") {
  const std::vector<std::pair<double, double>> samples{{0.5, 0.0}, {1.0, 2.0}, {2.0, -1.0}, {3.0, 4.0}};
  const DKernelReport a = dlambda_kernel_check(1.0, samples);
  CHECK(a.expected == doctest::Approx(1.0 / std::sqrt(16.0 * kPi)));
  CHECK(a.max_deviation <= 0.05);
  const DKernelReport b = dlambda_kernel_check(4.0, samples);
  CHECK(b.expected == doctest::Approx(0.5 * a.expected));
  CHECK(b.max_deviation <= 0.05);
  const DKernelReport coarse = dlambda_kernel_check(1.0, samples, 1 << 12);
  const DKernelReport fine = dlambda_kernel_check(1.0, samples, 1 << 13);
  CHECK(fine.max_deviation <= 0.5 * coarse.max_deviation);
  CHECK_THROWS_AS(dlambda_kernel_check(0.0, samples), Error);
}

TEST_CASE("transform output formats") {
  TransformParams p;
  p.n = 64;
  const TransformScan s = t_hat_l1_scan(zero_potential(grid()), grid(), unit_bump(), Window::LOW, p);
  const std::string csv = transform_csv(s);
  CHECK(csv.rfind("rho,l1_profile\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(s.rho.size()) + 1);
  const auto j = nlohmann::json::parse(transform_summary_json(s));
  CHECK(j.at("window") == "LOW");
  CHECK(j.at("n") == 64);
  CHECK(j.at("verdict") == "BOUNDED");
  CHECK(j.at("total").get<double>() == doctest::Approx(s.total));
  CHECK(j.at("delta_lambda").get<double>() == doctest::Approx(s.delta_lambda));
}
