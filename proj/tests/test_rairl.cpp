#include <cmath>
#include <random>

#include "regmdp/error.hpp"
#include "regmdp/irl.hpp"
#include "regmdp/rairl.hpp"
#include "support.hpp"

using namespace regmdp;

namespace {

RewardModel model_matching(const TabularPolicy& pi, const RegularizerSpec& spec, RewardModelKind kind) {
  if (kind == RewardModelKind::NSM) {
    RewardModel m = RewardModel::nsm(pi.n_states(), pi.n_actions());
    m.nsm_table = exact_irl_reward(pi, spec);
    return m;
  }
  RewardModel m = RewardModel::dbm(pi.n_states(), pi.n_actions());
  for (std::size_t s = 0; s < pi.n_states(); ++s) {
    for (std::size_t a = 0; a < pi.n_actions(); ++a) m.dbm_logits(s, a) = std::log(pi.probs(s, a));
    m.dbm_baseline[s] = spec.lambda * reward_baseline(pi.row(s), spec);
  }
  return m;
}

std::vector<StateAction> random_pairs(std::mt19937_64& rng, std::size_t n, std::size_t S, std::size_t A) {
  std::vector<StateAction> out(n);
  for (auto& p : out) p = {rng() % S, rng() % A};
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("reward models") {
  const auto sh = RegularizerSpec::shannon();
  const auto uni = RewardModel::dbm(2, 4);
  for (std::size_t a = 0; a < 4; ++a) CHECK(reward_of_model(uni, sh, 1, a) == doctest::Approx(std::log(0.25) + 1));
  RewardModel nsm = RewardModel::nsm(2, 3);
  nsm.nsm_table(1, 2) = 4.5;
  CHECK(reward_of_model(nsm, sh, 1, 2) == 4.5);

  std::mt19937_64 rng(1);
  const auto pi = random_interior_policy(rng, 3, 4);
  for (const auto& spec : default_family_specs(0.7)) {
    test::check_rows_close(reward_table(model_matching(pi, spec, RewardModelKind::DBM), spec),
                           exact_irl_reward(pi, spec), 1e-10);
  }
  const auto params = model_matching(pi, sh, RewardModelKind::DBM).parameters();
  CHECK(params.size() == 3 * 4 + 3);
  RewardModel back = RewardModel::dbm(3, 4);
  back.set_parameters(params);
  CHECK(back.parameters() == params);
  CHECK_THROWS(back.set_parameters(std::vector<double>(3)));
  const auto dp = back.dbm_policy();
  for (std::size_t s = 0; s < 3; ++s) {
    double sum = 0.0;
    for (double x : dp.row(s)) sum += x;
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("discriminator at the stationary point") {
  std::mt19937_64 rng(2);
  const auto pi = random_interior_policy(rng, 3, 3);
  const auto spec = RegularizerSpec::tsallis(1, 1.5);
  const auto pairs = random_pairs(rng, 50, 3, 3);
  for (auto kind : {RewardModelKind::NSM, RewardModelKind::DBM}) {
    auto m = model_matching(pi, spec, kind);
    const auto logits = discriminator_logits(m, pi, spec);
    for (double x : logits.flat()) CHECK(std::abs(x) <= 1e-10);
    CHECK(discriminator_objective(m, pairs, pairs, pi, spec) == doctest::Approx(2 * std::log(0.5)));
    CHECK(max_abs(discriminator_gradient(m, pairs, pairs, pi, spec)) <= 1e-12);
  }
  auto m = model_matching(pi, spec, RewardModelKind::DBM);
  const double before = discriminator_logit(m, pi, spec, 1, 2);
  m.dbm_baseline[1] += 0.75;
  CHECK(discriminator_logit(m, pi, spec, 1, 2) == doctest::Approx(before + 0.75));
}

TEST_CASE("discriminator gradient matches finite differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (auto kind : {RewardModelKind::NSM, RewardModelKind::DBM}) {
    for (const auto& spec : default_family_specs()) {
      CAPTURE(family_name(spec.family));
      const auto pi = random_interior_policy(rng, 4, 3);
      RewardModel m = kind == RewardModelKind::NSM ? RewardModel::nsm(4, 3) : RewardModel::dbm(4, 3);
      auto theta = m.parameters();
      for (auto& x : theta) x = n01(rng);
      m.set_parameters(theta);
      const auto demos = random_pairs(rng, 40, 4, 3), rolls = random_pairs(rng, 40, 4, 3);
      const auto g = discriminator_gradient(m, demos, rolls, pi, spec);
      std::vector<double> fd(theta.size());
      const double h = 1e-5;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        auto tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        RewardModel mp = m, mm = m;
        mp.set_parameters(tp);
        mm.set_parameters(tm);
        fd[i] = (discriminator_objective(mp, demos, rolls, pi, spec) -
                 discriminator_objective(mm, demos, rolls, pi, spec)) / (2 * h);
      }
      std::vector<double> diff(fd.size());
      for (std::size_t i = 0; i < fd.size(); ++i) diff[i] = g[i] - fd[i];
      CHECK(max_abs(diff) / std::max(1e-8, max_abs(fd)) <= 1e-5);
    }
  }
}

TEST_CASE("NSM step raises the demonstrated entry") {
  const auto pi = TabularPolicy::uniform(2, 3);
  const auto spec = RegularizerSpec::shannon();
  RewardModel m = RewardModel::nsm(2, 3);
  const std::vector<StateAction> demo{{1, 2}}, roll{{0, 1}};
  discriminator_step(m, demo, roll, pi, spec, 0.1);
  CHECK(m.nsm_table(1, 2) > 0.0);
  CHECK(m.nsm_table(0, 1) < 0.0);
  CHECK(m.nsm_table(0, 0) == 0.0);
}

TEST_CASE("actor gradient") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (const auto& spec : default_family_specs(0.9)) {
    CAPTURE(family_name(spec.family));
    std::vector<double> z(5), q(5);
    for (auto& x : z) x = n01(rng);
    for (auto& x : q) x = n01(rng);
    const auto g = actor_gradient(z, q, spec);
    std::vector<double> diff(5), fd(5);
    for (std::size_t i = 0; i < 5; ++i) {
      auto zp = z, zm = z;
      zp[i] += 1e-5;
      zm[i] -= 1e-5;
      fd[i] = (actor_objective(zp, q, spec) - actor_objective(zm, q, spec)) / 2e-5;
      diff[i] = g[i] - fd[i];
    }
    CHECK(max_abs(diff) / std::max(1e-8, max_abs(fd)) <= 1e-5);
  }
}

TEST_CASE("exact improvement recovers the expert") {
  const auto m = random_mdp(6, 8, 4, 0.95);
  std::mt19937_64 rng(6);
  const auto expert = random_interior_policy(rng, 8, 4);
  for (const auto& spec : default_family_specs()) {
    const auto pi = policy_improvement_exact(m, exact_irl_reward(expert, spec), spec);
    CHECK(max_state_tv(pi, expert) <= 1e-4);
  }
  const auto grid = bermuda_grid(9, 9);
  const auto spec = RegularizerSpec::tsallis(1, 2);
  const auto t = exact_irl_reward(*grid.expert, spec);
  std::vector<double> warm;
  CHECK(max_state_tv(policy_improvement_exact(grid.mdp, t, spec, &warm), *grid.expert) <= 1e-4);
  CHECK(warm.size() == 81);
}

TEST_CASE("actor-critic on zero reward spreads out") {
  const auto spec = RegularizerSpec::shannon();
  auto m = test::single_state({0, 0, 0}, 0.5);
  RegularizedActorCritic ac(1, 3, spec, 0.5, 0.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Transition> batch(64);
  auto train = [&](const Matrix& reward, int steps) {
    for (int k = 0; k < steps; ++k) {
      const auto pi = ac.policy();
      for (auto& tr : batch) tr = {0, sample_index(pi.row(0), u(rng)), 0};
      ac.critic_update(reward, batch, m.gamma);
      ac.actor_update(std::vector<std::size_t>{0});
    }
  };
  train(Matrix::from_rows({{3, 0, 0}}), 100);
  const double skewed = omega(spec, ac.policy().row(0));
  REQUIRE(ac.policy().probs(0, 0) > 0.5);
  train(Matrix(1, 3), 400);
  const auto pi = ac.policy();
  CHECK(omega(spec, pi.row(0)) < skewed);
  CHECK(total_variation(pi.row(0), std::vector<double>(3, 1.0 / 3)) < 0.05);
}

TEST_CASE("behavioral cloning") {
  DemoSet d;
  d.pairs = {{0, 2}, {1, 0}, {2, 1}};
  const auto bc = behavioral_cloning(d, 4, 3);
  CHECK(bc.probs(0, 2) == 1.0);
  CHECK(bc.probs(1, 0) == 1.0);
  CHECK(bc.probs(2, 1) == 1.0);
  for (double x : bc.row(3)) CHECK(x == doctest::Approx(1.0 / 3));
  const auto smooth = behavioral_cloning(d, 4, 3, 1.0);
  CHECK(smooth.probs(0, 2) == doctest::Approx(0.5));
}

TEST_CASE("training is deterministic and keeps DBM rows normalized") {
  const auto env = bandit_env(BanditKind::Dense);
  const auto demos = sample_demos(env.mdp, *env.expert, 5000, 11);
  TrainConfig cfg;
  cfg.iterations = 200;
  cfg.rollout_steps_per_iter = 20;
  cfg.batch_size = 100;
  cfg.rollout_buffer = 1000;
  cfg.eval_interval = 50;
  cfg.seed = 4;
  std::vector<double> losses;
  const auto a = rairl_train(env.mdp, demos, cfg, [&](const MetricsRow& r) { losses.push_back(r.disc_loss); });
  const auto b = rairl_train(env.mdp, demos, cfg);
  REQUIRE(a.metrics.rows.size() == 4);
  CHECK(losses.size() == 4);
  for (std::size_t i = 0; i < a.metrics.rows.size(); ++i) {
    CHECK(a.metrics.rows[i].disc_loss == b.metrics.rows[i].disc_loss);
    CHECK(a.metrics.rows[i].mean_bregman == b.metrics.rows[i].mean_bregman);
  }
  CHECK(a.model.parameters() == b.model.parameters());
  const auto pol = a.model.dbm_policy();
  double sum = 0.0;
  for (double x : pol.row(0)) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  // the final policy should already be much closer to the expert than uniform
  CHECK(a.metrics.rows.back().policy_tv < 0.5 * total_variation(std::vector<double>(4, 0.25), env.expert->row(0)));

  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(rairl_train(env.mdp, demos, bad), ParameterError);
}
