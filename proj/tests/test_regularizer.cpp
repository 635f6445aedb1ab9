#include <cmath>
#include <numbers>
#include <random>

#include "regmdp/error.hpp"
#include "support.hpp"

using namespace regmdp;

namespace {

double fd_fprime(const RegularizerSpec& s, double x, double h = 1e-6) {
  return (f_phi(s, x + h) - f_phi(s, x - h)) / (2 * h);
}

}  // namespace

TEST_CASE("phi values") {
  CHECK(phi(RegularizerSpec::shannon(), 1.0) == doctest::Approx(0.0));
  CHECK(phi(RegularizerSpec::tsallis(1, 2), 0.5) == doctest::Approx(0.5));
  CHECK(std::abs(phi(RegularizerSpec::exp(), 1.0)) < 1e-15);
}

TEST_CASE("f_phi_prime values") {
  CHECK(f_phi_prime(RegularizerSpec::shannon(), 1.0) == doctest::Approx(-1.0));
  CHECK(f_phi_prime(RegularizerSpec::tsallis(1, 2), 0.25) == doctest::Approx(0.5));
  for (const auto& s : default_family_specs()) {
    CAPTURE(family_name(s.family));
    CHECK(std::abs(f_phi_prime(s, 0.3) - fd_fprime(s, 0.3)) <= 1e-6);
  }
}

TEST_CASE("derivative consistency on random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (const auto& s : default_family_specs()) {
    CAPTURE(family_name(s.family));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      // keep the stencil inside the domain at x = 1
      const double x = std::min(u(rng), 1.0 - 1e-6);
      worst = std::max(worst, std::abs(f_phi_prime(s, x) - fd_fprime(s, x)));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("g_phi inverts f_phi_prime") {
  CHECK(g_phi(RegularizerSpec::shannon(), -1.0) == doctest::Approx(1.0));
  CHECK(g_phi(RegularizerSpec::tsallis(1, 2), 1.0) == 0.0);
  const auto cos_spec = RegularizerSpec::cos(1.0, std::numbers::pi / 2);
  CHECK(std::abs(g_phi(cos_spec, f_phi_prime(cos_spec, 0.4)) - 0.4) <= 1e-10);
  for (const auto& s : default_family_specs()) {
    CAPTURE(family_name(s.family));
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = 0.01 + 0.99 * i / 1000.0;
      worst = std::max(worst, std::abs(g_phi(s, f_phi_prime(s, x)) - x));
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("f_phi_prime strictly decreasing, f_phi strictly concave") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-4, 1.0);
  for (const auto& s : default_family_specs()) {
    CAPTURE(family_name(s.family));
    double prev = f_phi_prime(s, 1e-3);
    for (int i = 1; i <= 1000; ++i) {
      const double x = 1e-3 + (1.0 - 1e-3) * i / 1000.0;
      const double y = f_phi_prime(s, x);
      REQUIRE(y < prev);
      prev = y;
    }
    for (int i = 0; i < 100; ++i) {
      double x[3] = {u(rng), u(rng), u(rng)};
      std::sort(x, x + 3);
      if (x[2] - x[0] < 1e-6) continue;
      const double w = (x[1] - x[0]) / (x[2] - x[0]);
      CHECK(f_phi(s, x[1]) > (1 - w) * f_phi(s, x[0]) + w * f_phi(s, x[2]) - 1e-15);
    }
    CHECK(std::abs(f_phi(s, 1e-12)) < 1e-9);
  }
}

TEST_CASE("omega values") {
  const std::vector<double> u4(4, 0.25);
  CHECK(omega(RegularizerSpec::shannon(), u4) == doctest::Approx(-std::log(4.0)));
  CHECK(omega(RegularizerSpec::tsallis(1, 2), std::vector<double>{1.0, 0.0}) == 0.0);
  for (const auto& s : default_family_specs(2.5)) {
    CHECK(std::abs(omega(s, std::vector<double>{0.0, 1.0, 0.0})) < 1e-15);
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto p = test::random_simplex(rng, 5);
    double plogp = 0.0;
    for (double x : p) plogp += x * std::log(x);
    CHECK(std::abs(omega(RegularizerSpec::shannon(0.7), p) - 0.7 * plogp) <= 1e-12);
  }
}

TEST_CASE("grad_omega values and finite differences") {
  const auto g = grad_omega(RegularizerSpec::shannon(), std::vector<double>{0.5, 0.5});
  CHECK(g[0] == doctest::Approx(-(std::log(2.0) - 1.0)));
  CHECK(g[1] == doctest::Approx(0.306853).epsilon(1e-5));
  const auto t = grad_omega(RegularizerSpec::tsallis(1, 2), std::vector<double>{0.25, 0.75});
  CHECK(t[0] == doctest::Approx(-0.5));
  CHECK(t[1] == doctest::Approx(0.5));

  // Along simplex directions e_i - e_j the derivative of omega is g_i - g_j.
  std::mt19937_64 rng(9);
  for (const auto& s : default_family_specs(1.3)) {
    CAPTURE(family_name(s.family));
    const auto p = test::random_simplex(rng, 4, 0.1);
    const auto grad = grad_omega(s, p);
    const double h = 1e-6;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        if (i == j) continue;
        auto plus = p, minus = p;
        plus[i] += h, plus[j] -= h;
        minus[i] -= h, minus[j] += h;
        const double fd = (omega(s, plus) - omega(s, minus)) / (2 * h);
        CHECK(std::abs(fd - (grad[i] - grad[j])) <= 1e-6);
      }
    }
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(RegularizerSpec::tsallis(1, 1.0).validate(), ParameterError);
  CHECK_THROWS_AS(RegularizerSpec::tsallis(-1, 2.0).validate(), ParameterError);
  CHECK_THROWS_AS(RegularizerSpec::shannon(0.0).validate(), ParameterError);
  CHECK_THROWS_AS(RegularizerSpec::cos(1.0, 2.0).validate(), ParameterError);
  CHECK_NOTHROW(RegularizerSpec::sin(1.0, 1.0).validate());
  CHECK_THROWS_AS(parse_family("renyi"), ParameterError);
  CHECK_THROWS(omega(RegularizerSpec::shannon(), std::vector<double>{0.5, 0.6}));
}
