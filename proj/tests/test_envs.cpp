#include <cmath>
#include <numbers>

#include "regmdp/error.hpp"
#include "regmdp/rairl.hpp"
#include "support.hpp"

using namespace regmdp;

TEST_CASE("bandit") {
  const auto dense = bandit_env(BanditKind::Dense);
  CHECK_NOTHROW(dense.mdp.validate());
  double sum = 0.0;
  for (double x : dense.expert->row(0)) sum += x;
  CHECK(sum == doctest::Approx(1.0));
  const auto sparse = bandit_env(BanditKind::Sparse);
  CHECK(sparse.expert->probs(0, 0) == 0.0);
  CHECK(sparse.expert->probs(0, 2) == doctest::Approx(1.0 / 3));
  CHECK(sparse.expert->probs(0, 3) == doctest::Approx(2.0 / 3));
  std::mt19937_64 rng(3);
  const auto pi = random_interior_policy(rng, 1, 4);
  const auto d = visitation(dense.mdp, pi);
  for (std::size_t a = 0; a < 4; ++a) CHECK(d.d(0, a) == doctest::Approx(pi.probs(0, a)));
}

TEST_CASE("bermuda grid") {
  const auto env = bermuda_grid(21, 21);
  CHECK_NOTHROW(env.mdp.validate());
  REQUIRE(env.expert);
  CHECK_NOTHROW(env.expert->validate());
  CHECK(env.mdp.n_states == 441);
  CHECK(env.mdp.n_actions == 8);
  // node (10, 0) is the point (0, 0)
  const std::size_t origin = 10;
  CHECK(env.coords[origin].first == doctest::Approx(0.0));
  CHECK(env.coords[origin].second == doctest::Approx(0.0));
  const auto row = env.expert->row(origin);
  const auto best = std::max_element(row.begin(), row.end()) - row.begin();
  CHECK(static_cast<std::size_t>(best) == bermuda_nearest_action(std::numbers::pi / 2));
  CHECK(bermuda_action_angle(best) == doctest::Approx(std::numbers::pi / 2));
  for (std::size_t i = 0; i < 21; ++i) {
    const std::size_t s = 20 * 21 + i;
    for (std::size_t a = 0; a < 8; ++a) CHECK(env.mdp.next_state_probs(s, a)[s] == 1.0);
  }
  // mirror x -> -x maps angle t to pi - t, i.e. action k to (12 - k) mod 8
  for (double x : {-4.0, -1.3, 0.7, 2.5}) {
    for (double y : {0.0, 3.3, 7.9}) {
      const auto l = bermuda_expert_row(x, y), r = bermuda_expert_row(-x, y);
      for (std::size_t k = 0; k < 8; ++k) CHECK(l[k] == doctest::Approx(r[(12 - k) % 8]).epsilon(1e-12));
    }
  }
  // starts on the bottom row only
  for (std::size_t s = 0; s < env.mdp.n_states; ++s) CHECK((env.mdp.p0[s] > 0) == (s < 21));
}

TEST_CASE("random mdp") {
  const auto a = random_mdp(42, 6, 3, 0.9), b = random_mdp(42, 6, 3, 0.9), c = random_mdp(43, 6, 3, 0.9);
  CHECK(a.transition == b.transition);
  CHECK(*a.reward == *b.reward);
  CHECK(a.p0 == b.p0);
  CHECK_FALSE(a.transition == c.transition);
  for (double x : a.transition.flat()) CHECK(x > 0.0);
  const auto sparse = random_mdp(42, 20, 3, 0.9, 0.2);
  CHECK_NOTHROW(sparse.validate());
  for (std::uint64_t s = 0; s < 20; ++s) CHECK_NOTHROW(random_mdp(s, 1 + s % 7, 1 + s % 4, 0.95, 0.5).validate());
}

TEST_CASE("demos") {
  const auto env = bandit_env(BanditKind::Dense);
  const auto demos = sample_demos(env.mdp, *env.expert, 100'000, 1);
  const auto bc = behavioral_cloning(demos, 1, 4);
  CHECK(total_variation(bc.row(0), env.expert->row(0)) <= 0.01);
  const auto again = sample_demos(env.mdp, *env.expert, 100'000, 1);
  CHECK(again.pairs == demos.pairs);

  const auto m = random_mdp(5, 6, 3, 0.9);
  Matrix det(6, 3);
  for (std::size_t s = 0; s < 6; ++s) det(s, (s * 2) % 3) = 1.0;
  for (const auto& p : sample_demos(m, TabularPolicy{det}, 5000, 3).pairs) CHECK(det(p.s, p.a) == 1.0);
}

TEST_CASE("demo frequencies converge to visitation") {
  const auto m = random_mdp(8, 4, 3, 0.8);
  std::mt19937_64 rng(8);
  const auto pi = random_interior_policy(rng, 4, 3);
  const std::size_t n = 1'000'000;
  const auto demos = sample_demos(m, pi, n, 99);
  Matrix freq(4, 3);
  for (const auto& p : demos.pairs) freq(p.s, p.a) += 1.0 / n;
  const auto d = visitation(m, pi);
  // Chain samples are correlated; the effective size is roughly n (1 - gamma).
  const double n_eff = n * (1 - m.gamma);
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t a = 0; a < 3; ++a) {
      const double se = std::sqrt(d.d(s, a) * (1 - d.d(s, a)) / n_eff);
      CHECK(std::abs(freq(s, a) - d.d(s, a)) <= 3 * se);
    }
  }
}

TEST_CASE("environment names") {
  CHECK(make_environment("bandit:dense").mdp.n_actions == 4);
  CHECK(make_environment("bermuda:5x7").mdp.n_states == 35);
  CHECK(make_environment("random:seed=7,s=10,a=4").mdp.n_states == 10);
  CHECK(make_environment("random:seed=7,s=10,a=4,gamma=0.5,sparsity=0.5").mdp.gamma == 0.5);
  CHECK_THROWS_AS(make_environment("maze"), ParameterError);
  CHECK_THROWS_AS(make_environment("random:seed=7,colour=3"), ParameterError);
}
