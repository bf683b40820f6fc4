#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "edist/energy.hpp"
#include "edist/error.hpp"
#include "../support.hpp"

using namespace edist;
namespace ts = edist::testing_support;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<double> v(std::initializer_list<double> xs) { return xs; }
}  // namespace

TEST_CASE("GammaOrder rejects the closed endpoints") {
  CHECK_THROWS_AS(GammaOrder(0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(GammaOrder(2.0, 1), InvalidArgument);
  CHECK_THROWS_AS(GammaOrder(-1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(GammaOrder(1.0, 0), InvalidArgument);
  CHECK_NOTHROW(GammaOrder(1e-6, 3));
  CHECK_NOTHROW(GammaOrder(1.999, 3));
}

TEST_CASE("special constants") {
  CHECK(constants(GammaOrder(1.0, 1), Constant::kFourier) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(constants(GammaOrder(1.0, 2), Constant::kSlice) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(constants(GammaOrder(1.0, 3), Constant::kPsi) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(constants(GammaOrder(1.0, 1), Constant::kDhFactor) == doctest::Approx(1.0).epsilon(1e-14));
  // Closed forms at a gamma != 1 point, evaluated by hand:
  // gamma = 1/2, d = 1: S = pi^{3/2} Gamma(3/4) / (2^{1/2} Gamma(3/4) cos^2(pi/8) Gamma(1/4)^2).
  const double c8 = std::cos(kPi / 8);
  CHECK(GammaOrder(0.5, 1).slice_constant() ==
        doctest::Approx(std::pow(kPi, 1.5) / (std::sqrt(2.0) * c8 * c8 * std::pow(std::tgamma(0.25), 2)))
            .epsilon(1e-13));
  CHECK(GammaOrder(0.5, 1).psi_constant() == doctest::Approx(1.0 / (c8 * std::tgamma(0.25))).epsilon(1e-13));
  for (double g : {0.3, 1.0, 1.7}) {
    for (std::size_t d : {1u, 3u, 10u}) CHECK(GammaOrder(g, d).fourier_constant() > 0.0);
  }
  // F_gamma(d) at d = 2, gamma = 1: Gamma(3/2) / (pi Gamma(1/2)) = 1 / (2 pi).
  CHECK(GammaOrder(1.0, 2).fourier_constant() == doctest::Approx(1.0 / (2 * kPi)).epsilon(1e-14));
  CHECK(sphere_area(2) == doctest::Approx(2 * kPi));
  CHECK(sphere_area(3) == doctest::Approx(4 * kPi));
}

TEST_CASE("kernel examples") {
  const GammaOrder g1(1.0, 2);
  CHECK(kernel_gamma(v({0, 0}), v({3, -4}), g1) == doctest::Approx(0.0));
  CHECK(kernel_gamma(v({3, 4}), v({3, 4}), g1) == doctest::Approx(10.0));
  CHECK(kernel_gamma(v({1, 0}), v({0, 1}), g1) == doctest::Approx(2.0 - std::sqrt(2.0)));
  CHECK_THROWS_AS(kernel_gamma(v({1}), v({0, 1}), g1), DimensionMismatch);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x{rng.normal(), rng.normal()}, y{rng.normal(), rng.normal()};
    const GammaOrder g(0.2 + 1.6 * rng.uniform(), 2);
    CHECK(kernel_gamma(x, y, g) == kernel_gamma(y, x, g));
  }
}

TEST_CASE("vstat examples") {
  const GammaOrder g1(1.0, 2);
  Rng rng(4);
  const auto a = ts::random_measure(rng, 30, 2);
  CHECK(energy_sq_vstat(a, a, g1) == 0.0);
  CHECK(energy_sq_vstat(EmpiricalMeasure({0, 0}, 2), EmpiricalMeasure({1, 0}, 2), g1) ==
        doctest::Approx(2.0));
  const GammaOrder l1(1.0, 1);
  CHECK(energy_sq_vstat(EmpiricalMeasure::on_line({0, 2}), EmpiricalMeasure::on_line({1}), l1) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(energy_sq_vstat(EmpiricalMeasure({0}, 1), EmpiricalMeasure({0, 0}, 2), g1),
                  DimensionMismatch);
}

TEST_CASE("vstat agrees with a naive long-double oracle") {
  Rng rng(5);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t d = 1 + rng.below(4);
    const double gm = 0.1 + 1.8 * rng.uniform();
    const auto a = ts::random_weighted_measure(rng, 1 + rng.below(40), d);
    const auto b = ts::random_measure(rng, 1 + rng.below(40), d, 1.5, 0.3);
    const GammaOrder g(gm, d);
    CHECK(energy_sq_vstat(a, b, g) == doctest::Approx(ts::naive_energy_sq(a, b, gm)).epsilon(1e-11));
  }
}

TEST_CASE("MMD identity") {
  Rng rng(6);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t d = 1 + rng.below(3);
    const GammaOrder g(0.5 * (1 + rng.below(3)), d);
    const auto a = ts::random_weighted_measure(rng, 1 + rng.below(60), d);
    const auto b = ts::random_measure(rng, 1 + rng.below(60), d, 2.0);
    CHECK(std::abs(energy_sq_vstat(a, b, g) - energy_sq_mmd(a, b, g)) <= 1e-10);
  }
}

TEST_CASE("MMD identity at n = 10^4") {
  Rng rng(61);
  const GammaOrder g(1.0, 2);
  const auto a = ts::random_measure(rng, 10000, 2);
  const auto b = ts::random_measure(rng, 2000, 2, 1.0, 0.05);
  CHECK(std::abs(energy_sq_vstat(a, b, g) - energy_sq_mmd(a, b, g)) <= 1e-10);
}

TEST_CASE("ustat examples") {
  const GammaOrder g(1.0, 1);
  const auto x = EmpiricalMeasure::on_line({0, 2});
  CHECK(energy_sq_ustat(x, x, g) <= 0.0);
  CHECK(energy_sq_ustat(x, EmpiricalMeasure::on_line({1, 1}), g) == doctest::Approx(0.0));
  CHECK_THROWS_AS(energy_sq_ustat(x, EmpiricalMeasure::on_line({1}), g), InvalidArgument);
  CHECK_THROWS_AS(energy_sq_ustat(EmpiricalMeasure({0, 1}, 1, {0.3, 0.7}), x, g), InvalidArgument);
}

TEST_CASE("ustat is unbiased") {
  // mu = N(0,1), nu = N(0.5, 1) in d = 2; population value from a large V-statistic.
  const GammaOrder g(1.0, 2);
  const auto big_a = sample(Gaussian{{0.0, 0.0}, 1.0}, 4000, 1);
  const auto big_b = sample(Gaussian{{0.5, 0.0}, 1.0}, 4000, 2);
  const double population = energy_sq_ustat(big_a, big_b, g);
  const int reps = 2000;
  double s = 0, s2 = 0;
  for (int r = 0; r < reps; ++r) {
    const auto a = sample(Gaussian{{0.0, 0.0}, 1.0}, 50, substream(10, r));
    const auto b = sample(Gaussian{{0.5, 0.0}, 1.0}, 50, substream(20, r));
    const double u = energy_sq_ustat(a, b, g);
    s += u;
    s2 += u * u;
  }
  const double mean = s / reps;
  const double se = std::sqrt((s2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean - population) <= 3.0 * se + 0.004);
}

TEST_CASE("metric axioms on sqrt of vstat") {
  Rng rng(8);
  for (double gm : {0.5, 1.0, 1.5}) {
    const GammaOrder g(gm, 2);
    int violations = 0;
    for (int t = 0; t < 200; ++t) {
      const auto a = ts::random_measure(rng, 20, 2);
      const auto b = ts::random_measure(rng, 20, 2, 1.0, 0.3 * rng.normal());
      const auto c = ts::random_measure(rng, 20, 2, 1.2);
      const double ab = std::sqrt(energy_sq_vstat(a, b, g));
      const double ba = std::sqrt(energy_sq_vstat(b, a, g));
      const double bc = std::sqrt(energy_sq_vstat(b, c, g));
      const double ac = std::sqrt(energy_sq_vstat(a, c, g));
      CHECK(ab == ba);
      violations += ac > ab + bc + 1e-10;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("scaling multiplies by c^gamma") {
  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    const double gm = 0.1 + 1.8 * rng.uniform();
    const GammaOrder g(gm, 3);
    const auto a = ts::random_measure(rng, 25, 3);
    const auto b = ts::random_measure(rng, 17, 3, 1.0, 0.4);
    const double c = std::exp(2.0 * rng.uniform() - 1.0);
    const double lhs = energy_sq_vstat(a.scaled(c), b.scaled(c), g);
    CHECK(std::abs(lhs - std::pow(c, gm) * energy_sq_vstat(a, b, g)) <= 1e-12 * lhs);
  }
}

TEST_CASE("gradient examples") {
  const GammaOrder g(1.0, 1);
  const auto grad = grad_energy_sq(EmpiricalMeasure::on_line({2.0}), EmpiricalMeasure::on_line({0.0}), g);
  CHECK(grad[0] == doctest::Approx(2.0));
  // coincident cross pair contributes nothing
  const auto zero = grad_energy_sq(EmpiricalMeasure::on_line({1.0}), EmpiricalMeasure::on_line({1.0}), g);
  CHECK(zero[0] == 0.0);
  // symmetric configuration: mu = nu = {-1, 1}
  const auto sym = EmpiricalMeasure::on_line({-1.0, 1.0});
  for (double x : grad_energy_sq(sym, sym, g)) CHECK(std::abs(x) <= 1e-10);
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(10);
  for (double gm : {0.5, 1.0, 1.5}) {
    for (int rep = 0; rep < 5; ++rep) {
      const std::size_t d = 1 + rng.below(3);
      const GammaOrder g(gm, d);
      const auto mu = ts::random_measure(rng, 6, d);
      const auto nu = ts::random_weighted_measure(rng, 9, d);
      const auto grad = grad_energy_sq(mu, nu, g);
      const double h = 1e-5;
      for (std::size_t k = 0; k < grad.size(); ++k) {
        auto up = std::vector<double>(mu.coords().begin(), mu.coords().end());
        auto dn = up;
        up[k] += h;
        dn[k] -= h;
        const double fd = (ts::naive_energy_sq(EmpiricalMeasure(up, d), nu, gm) -
                           ts::naive_energy_sq(EmpiricalMeasure(dn, d), nu, gm)) /
                          (2 * h);
        CHECK(std::abs(fd - grad[k]) <= 1e-5 * std::max(1.0, std::abs(grad[k])));
      }
    }
  }
}

TEST_CASE("gradient clipping for small gamma") {
  const GammaOrder g(0.3, 1);
  GradientOptions opts;
  opts.clip = 5.0;
  const auto grad = grad_energy_sq(EmpiricalMeasure::on_line({1e-12}), EmpiricalMeasure::on_line({0.0}), g, opts);
  CHECK(std::abs(grad[0]) == doctest::Approx(5.0));
}
