#include <cmath>
#include <numbers>
#include <random>

#include "regmdp/divergence.hpp"
#include "regmdp/error.hpp"
#include "support.hpp"

using namespace regmdp;

namespace {

const double kInvTwoRootPi = 1.0 / (2.0 * std::sqrt(std::numbers::pi));

DiagGaussian gauss2(double m0, double m1, double s0, double s1) { return {{m0, m1}, {s0, s1}}; }

}  // namespace

TEST_CASE("discrete Bregman") {
  const std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  CHECK(bregman_discrete(p, p, RegularizerSpec::tsallis(1, 1.5)) == doctest::Approx(0.0));
  CHECK(bregman_discrete(p, q, RegularizerSpec::shannon()) == doctest::Approx(0.510826).epsilon(1e-6));

  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto a = test::random_simplex(rng, 4, 0.0), b = test::random_simplex(rng, 4, 0.0);
    double kl = 0.0, sq = 0.0;
    for (int j = 0; j < 4; ++j) {
      kl += a[j] * std::log(a[j] / b[j]);
      sq += (a[j] - b[j]) * (a[j] - b[j]);
    }
    CHECK(std::abs(bregman_discrete(a, b, RegularizerSpec::shannon(1.5)) - 1.5 * kl) <= 1e-12);
    CHECK(std::abs(bregman_discrete(a, b, RegularizerSpec::tsallis(1, 2, 0.5)) - 0.5 * sq) <= 1e-12);
    for (const auto& spec : default_family_specs()) {
      CHECK(bregman_discrete(a, b, spec) >= -1e-10);
      CHECK(std::abs(bregman_discrete(a, a, spec)) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(bregman_discrete(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0},
                                   RegularizerSpec::shannon()),
                  DomainError);
}

TEST_CASE("mean Bregman") {
  std::mt19937_64 rng(7);
  const auto e = random_interior_policy(rng, 3, 4);
  const std::vector<std::size_t> states{0, 1, 2, 2};
  const auto spec = RegularizerSpec::tsallis(1, 2);
  CHECK(mean_bregman(e, e, states, spec) == doctest::Approx(0.0));
  const auto u = TabularPolicy::uniform(3, 4);
  const double want =
      (bregman_discrete(u.row(0), e.row(0), spec) + bregman_discrete(u.row(1), e.row(1), spec) +
       2 * bregman_discrete(u.row(2), e.row(2), spec)) / 4;
  CHECK(mean_bregman(u, e, states, spec) == doctest::Approx(want));
  const std::vector<std::size_t> one{1};
  CHECK(mean_bregman(u, e, one, spec) == doctest::Approx(bregman_discrete(u.row(1), e.row(1), spec)));
}

TEST_CASE("Gaussian Tsallis closed forms") {
  CHECK(gaussian_tsallis_entropy(gaussian_1d(0, 1), 2.0) == doctest::Approx(1 - kInvTwoRootPi).epsilon(1e-12));
  CHECK(gaussian_tsallis_entropy(gaussian_1d(0, 1), 2.0, 3.0) ==
        doctest::Approx(3 * (1 - kInvTwoRootPi)).epsilon(1e-12));
  const auto g = gauss2(0.3, -1, 0.7, 1.9);
  CHECK(gaussian_tsallis_entropy(g, 2.0) == doctest::Approx(1 - kInvTwoRootPi / 0.7 * kInvTwoRootPi / 1.9));
  CHECK(gaussian_tsallis_entropy(gaussian_1d(0, 2), 1.0) ==
        doctest::Approx(0.5 * std::log(2 * std::numbers::pi * std::numbers::e * 4)));
  CHECK(gaussian_reward_baseline(gaussian_1d(0, 1), 1.0, 1.0) == doctest::Approx(-1.0));
  CHECK(gaussian_reward_baseline(gaussian_1d(0, 1), 2.0, 1.0) == doctest::Approx(-kInvTwoRootPi));
  CHECK(gaussian_bregman_tsallis(gaussian_1d(1, 1), gaussian_1d(0, 1), 1.0) == doctest::Approx(0.5));
  CHECK(gaussian_kl(gaussian_1d(1, 1), gaussian_1d(0, 1)) == doctest::Approx(0.5));
  for (double q : {1.0, 1.5, 2.0}) {
    CHECK(std::abs(gaussian_bregman_tsallis(g, g, q)) <= 1e-12);
  }
  CHECK_THROWS_AS(gaussian_tsallis_entropy(DiagGaussian{{0.0}, {-1.0}}, 2.0), ParameterError);
}

TEST_CASE("Gaussian oracles") {
  const MonteCarlo mc{1'000'000, 42};
  const auto g = gauss2(0.2, -0.4, 0.8, 1.3);
  for (double q : {1.0, 1.5, 2.0}) {
    CAPTURE(q);
    const auto e = numeric_entropy_oracle(g, q, 2.0, mc);
    REQUIRE(e.std_error);
    CHECK(std::abs(e.value - gaussian_tsallis_entropy(g, q, 2.0)) <= 3 * *e.std_error);
    const auto b = numeric_baseline_oracle(g, q, 1.0, mc);
    CHECK(std::abs(b.value - gaussian_reward_baseline(g, q, 1.0)) <= 3 * *b.std_error);
    const auto h = gauss2(0.0, 0.1, 1.1, 0.9);
    const auto d = numeric_bregman_oracle(g, h, q, mc);
    CHECK(std::abs(d.value - gaussian_bregman_tsallis(g, h, q)) <= 3 * *d.std_error);
  }
  const auto again = numeric_entropy_oracle(g, 1.5, 2.0, mc);
  CHECK(again.value == numeric_entropy_oracle(g, 1.5, 2.0, mc).value);
  CHECK(numeric_entropy_oracle(g, 1.5, 2.0, mc).value ==
        doctest::Approx(2.0 * numeric_entropy_oracle(g, 1.5, 1.0, mc).value));

  const Quadrature quad{1e-12};
  CHECK(std::abs(numeric_entropy_oracle(gaussian_1d(0, 1), 2.0, 1.0, quad).value - (1 - kInvTwoRootPi)) <= 1e-8);
  const auto p = gaussian_1d(0.5, 0.8), ph = gaussian_1d(0.0, 0.3);
  CHECK(std::abs(numeric_bregman_oracle(p, ph, 2.0, quad).value - gaussian_bregman_tsallis(p, ph, 2.0)) <= 1e-6);
  CHECK_THROWS_AS(numeric_entropy_oracle(g, 2.0, 1.0, quad), ParameterError);
}

TEST_CASE("adaptive Simpson") {
  CHECK(adaptive_simpson([](double x) { return std::exp(-x * x); }, -10, 10, 1e-12) ==
        doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-11));
}

TEST_CASE("heatmap") {
  const auto expert = gaussian_1d(0.0, std::exp(-3.0));
  const auto grid = heatmap_grid(expert, -2, 2, -6, 0, 101, 101, 1.0);
  // centre cell sits on the expert
  CHECK(std::abs(grid.raw(50, 50)) <= 1e-12);
  double mx = 0.0;
  for (double x : grid.values.flat()) mx = std::max(mx, x);
  CHECK(mx == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 101; i += 10) {
    for (std::size_t j = 0; j < 101; j += 10) {
      const double kl = gaussian_kl(gaussian_1d(grid.mu[i], std::exp(grid.log_sigma[j])), expert);
      CHECK(std::abs(grid.raw(i, j) - kl) <= 1e-10 * std::max(1.0, kl));
    }
  }
  const double f = fraction_below(grid, 0.1);
  CHECK(f > 0.0);
  CHECK(f < 1.0);
}
