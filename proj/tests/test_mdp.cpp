#include <algorithm>
#include <cmath>
#include <random>

#include "regmdp/error.hpp"
#include "support.hpp"

using namespace regmdp;

namespace {

// Discounted episodes: stop after each step with probability 1 - gamma. The
// pair at the stopping step is a draw from d_pi; the undiscounted sum along
// the episode is an unbiased estimate of the regularized return.
struct Rollouts {
  Matrix counts;
  double mean_return = 0.0;
  double return_se = 0.0;
  std::size_t n = 0;
};

Rollouts rollouts(const TabularMdp& m, const TabularPolicy& pi, const RegularizerSpec& spec,
                  std::size_t episodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> om(m.n_states);
  for (std::size_t s = 0; s < m.n_states; ++s) om[s] = omega(spec, pi.row(s));
  Rollouts out;
  out.counts = Matrix(m.n_states, m.n_actions);
  out.n = episodes;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::size_t s = sample_index(m.p0, u(rng));
    double g = 0.0;
    while (true) {
      const std::size_t a = sample_index(pi.row(s), u(rng));
      g += (*m.reward)(s, a) - om[s];
      if (u(rng) >= m.gamma) {
        out.counts(s, a) += 1.0;
        break;
      }
      s = sample_index(m.next_state_probs(s, a), u(rng));
    }
    sum += g;
    sum2 += g * g;
  }
  out.mean_return = sum / episodes;
  out.return_se = std::sqrt((sum2 / episodes - out.mean_return * out.mean_return) / episodes);
  return out;
}

}  // namespace

TEST_CASE("mdp validation names the bad row") {
  TabularMdp m = random_mdp(1, 4, 3, 0.9);
  CHECK_NOTHROW(m.validate());
  m.transition(m.pair_index(2, 1), 0) += 0.3;
  try {
    m.validate();
    FAIL("corrupted row accepted");
  } catch (const InvariantError& e) {
    CHECK(std::string(e.what()).find("s=2, a=1") != std::string::npos);
  }
  TabularMdp g = random_mdp(1, 4, 3, 0.9);
  g.gamma = 1.0;
  CHECK_THROWS_AS(g.validate(), InvariantError);
  g = random_mdp(1, 4, 3, 0.9);
  g.p0[0] += 0.1;
  CHECK_THROWS_AS(g.validate(), InvariantError);
}

TEST_CASE("visitation closed cases") {
  const auto m = test::single_state({0, 0, 0}, 0.7);
  TabularPolicy pi{Matrix::from_rows({{0.2, 0.3, 0.5}})};
  const auto d = visitation(m, pi);
  for (std::size_t a = 0; a < 3; ++a) CHECK(d.d(0, a) == doctest::Approx(pi.probs(0, a)));

  TabularMdp chain;
  chain.n_states = 2;
  chain.n_actions = 2;
  chain.p0 = {0.25, 0.75};
  chain.transition = Matrix::from_rows({{0, 1}, {0, 1}, {1, 0}, {0.5, 0.5}});
  chain.gamma = 0.0;
  TabularPolicy p2{Matrix::from_rows({{0.6, 0.4}, {0.1, 0.9}})};
  const auto d2 = visitation(chain, p2);
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t a = 0; a < 2; ++a) CHECK(d2.d(s, a) == doctest::Approx(chain.p0[s] * p2.probs(s, a)));
  }
}

TEST_CASE("visitation matches Monte Carlo") {
  const auto m = random_mdp(21, 5, 3, 0.9);
  std::mt19937_64 rng(4);
  const auto pi = random_interior_policy(rng, 5, 3);
  const auto d = visitation(m, pi);
  const std::size_t n = 1'000'000;
  const auto mc = rollouts(m, pi, RegularizerSpec::shannon(), n, 77);
  for (std::size_t s = 0; s < 5; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      const double p = d.d(s, a);
      const double se = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(mc.counts(s, a) / n - p) <= 3 * se);
    }
  }
}

TEST_CASE("policy evaluation closed cases") {
  // zero reward, self-loops: V = H(pi) / (1 - gamma)
  TabularMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.p0 = {0.5, 0.5};
  m.transition = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
  m.gamma = 0.8;
  m.reward = Matrix(2, 2);
  TabularPolicy pi{Matrix::from_rows({{0.3, 0.7}, {0.3, 0.7}})};
  const double h = -(0.3 * std::log(0.3) + 0.7 * std::log(0.7));
  const auto pv = regularized_policy_evaluation(m, pi, RegularizerSpec::shannon());
  CHECK(pv.v[0] == doctest::Approx(h / 0.2));
  CHECK(pv.v[1] == doctest::Approx(h / 0.2));

  auto one = random_mdp(8, 3, 4, 0.9);
  one.gamma = 0.0;
  std::mt19937_64 rng(8);
  const auto p = random_interior_policy(rng, 3, 4);
  for (const auto& spec : default_family_specs(0.5)) {
    const auto v = regularized_policy_evaluation(one, p, spec).v;
    for (std::size_t s = 0; s < 3; ++s) {
      double e = 0.0;
      for (std::size_t a = 0; a < 4; ++a) e += p.probs(s, a) * (*one.reward)(s, a);
      CHECK(v[s] == doctest::Approx(e - omega(spec, p.row(s))));
    }
  }
}

TEST_CASE("return value agrees with evaluation and Monte Carlo") {
  const auto m = random_mdp(31, 6, 3, 0.9);
  std::mt19937_64 rng(31);
  const auto pi = random_interior_policy(rng, 6, 3);
  for (const auto& spec : default_family_specs()) {
    const auto v = regularized_policy_evaluation(m, pi, spec).v;
    double ev = 0.0;
    for (std::size_t s = 0; s < 6; ++s) ev += m.p0[s] * v[s];
    CHECK(std::abs(return_value(m, pi, spec) - ev) <= 1e-7);
    CHECK(std::abs(exact_policy_values(m, *m.reward, pi, spec)[2] - v[2]) <= 1e-8);
  }
  const auto spec = RegularizerSpec::tsallis(1, 2);
  const auto mc = rollouts(m, pi, spec, 100'000, 5);  // ~10^6 steps at gamma 0.9
  CHECK(std::abs(mc.mean_return - return_value(m, pi, spec)) <= 3 * mc.return_se);

  TabularMdp z = m;
  z.reward = Matrix(6, 3);
  Matrix onehot(6, 3);
  for (std::size_t s = 0; s < 6; ++s) onehot(s, s % 3) = 1.0;
  for (const auto& sp : default_family_specs()) {
    CHECK(std::abs(return_value(z, TabularPolicy{onehot}, sp)) < 1e-12);
  }
  const auto b = test::single_state({0.5, -1.0}, 0.0);
  TabularPolicy bp{Matrix::from_rows({{0.25, 0.75}})};
  const auto sh = RegularizerSpec::shannon();
  CHECK(return_value(b, bp, sh) == doctest::Approx(0.25 * 0.5 - 0.75 - omega(sh, bp.row(0))));
}

TEST_CASE("optimal state policy") {
  const auto sp = optimal_state_policy(std::vector<double>{1, 2}, RegularizerSpec::shannon());
  CHECK(sp.p[0] == doctest::Approx(0.268941).epsilon(1e-6));
  CHECK(sp.p[1] == doctest::Approx(0.731059).epsilon(1e-6));
  for (const auto& spec : default_family_specs(0.8)) {
    const auto u = optimal_state_policy(std::vector<double>{3, 3, 3, 3}, spec);
    for (double x : u.p) CHECK(x == doctest::Approx(0.25));
  }
  // Tsallis k = 1/2, q = 2 is sparsemax: Euclidean projection onto the simplex.
  const std::vector<double> q{0.8, 0.3, -1.0};
  std::vector<double> z = q;
  std::sort(z.rbegin(), z.rend());
  double cum = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    cum += z[k];
    const double t = (cum - 1.0) / (k + 1.0);
    if (z[k] > t) tau = t;
  }
  const auto proj = optimal_state_policy(q, RegularizerSpec::tsallis(0.5, 2));
  for (std::size_t a = 0; a < 3; ++a) CHECK(std::abs(proj.p[a] - std::max(q[a] - tau, 0.0)) <= 1e-10);
  CHECK(proj.p[2] == 0.0);
}

TEST_CASE("value iteration closed cases") {
  const auto b = test::single_state({0, 1}, 0.0);
  const auto sol = regularized_value_iteration(b, RegularizerSpec::shannon());
  CHECK(sol.policy.probs(0, 0) == doctest::Approx(0.268941).epsilon(1e-6));
  CHECK(sol.v_values[0] == doctest::Approx(std::log(1 + std::exp(1.0))));

  auto m = random_mdp(2, 5, 3, 0.9);
  m.reward = Matrix(5, 3);
  for (const auto& spec : default_family_specs()) {
    const auto z = regularized_value_iteration(m, spec);
    for (double x : z.policy.probs.flat()) CHECK(x == doctest::Approx(1.0 / 3));
  }
}

TEST_CASE("value iteration uniqueness, conjugacy and sparsity") {
  const auto m = random_mdp(14, 6, 4, 0.9);
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (const auto& spec : default_family_specs()) {
    CAPTURE(family_name(spec.family));
    const auto ref = regularized_value_iteration(m, spec);
    for (std::size_t s = 0; s < 6; ++s) {
      const auto row = ref.q_values.row(s);
      double inner = 0.0;
      for (std::size_t a = 0; a < 4; ++a) inner += ref.policy.probs(s, a) * row[a];
      CHECK(std::abs(ref.v_values[s] - (inner - omega(spec, ref.policy.row(s)))) <= 1e-8);
    }
    for (int k = 0; k < 10; ++k) {
      ValueIterationOptions opt;
      opt.initial_v.resize(6);
      for (auto& v : opt.initial_v) v = u(rng);
      CHECK(max_state_tv(regularized_value_iteration(m, spec, opt).policy, ref.policy) <= 1e-6);
    }
    const auto pi = regularized_policy_iteration(m, *m.reward, spec);
    CHECK(max_state_tv(pi.policy, ref.policy) <= 1e-8);
  }
  auto sep = test::single_state({0, 5, 10}, 0.5);
  const auto sparse = regularized_value_iteration(sep, RegularizerSpec::tsallis(1, 2));
  CHECK(sparse.policy.probs(0, 0) == 0.0);
  CHECK(sparse.policy.probs(0, 1) == 0.0);
  const auto dense = regularized_value_iteration(sep, RegularizerSpec::shannon());
  for (double x : dense.policy.probs.flat()) CHECK(x > 0.0);
}
