#include "regmdp/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "regmdp/divergence.hpp"
#include "regmdp/envs.hpp"
#include "regmdp/error.hpp"
#include "regmdp/irl.hpp"
#include "regmdp/kernels.hpp"
#include "regmdp/probability.hpp"

namespace regmdp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

// Runs body, which fills detail and returns pass/fail; exceptions count as failures.
template <class Body>
CheckResult run_check(std::string id, std::string title, Body&& body) {
  CheckResult r;
  r.id = std::move(id);
  r.title = std::move(title);
  const auto t0 = Clock::now();
  try {
    r.passed = body(r.detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = seconds_since(t0);
  return r;
}

std::vector<RegularizerSpec> families(double lambda) { return default_family_specs(lambda); }

// Small random problem shared by the algebraic checks.
struct Instance {
  TabularMdp mdp;
  TabularPolicy pi;
  TabularPolicy expert;
};

Instance random_instance(std::uint64_t seed, std::size_t max_s, std::size_t max_a, double gamma) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> ds(2, max_s);
  std::uniform_int_distribution<std::size_t> da(2, max_a);
  const std::size_t S = ds(rng);
  const std::size_t A = da(rng);
  Instance in;
  in.mdp = random_mdp(rng(), S, A, gamma);
  in.pi = random_interior_policy(rng, S, A);
  in.expert = random_interior_policy(rng, S, A);
  return in;
}

// ---- criterion 1: IRL round trip --------------------------------------------

bool check_round_trip(std::string& detail) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_at;
  std::size_t solves = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Instance in = random_instance(100 + i, 20, 5, 0.95);
    for (double lambda : {0.1, 1.0, 5.0}) {
      for (const auto& spec : families(lambda)) {
        const Matrix r = exact_irl_reward(in.expert, spec);
        const ValueSolution sol = regularized_value_iteration(in.mdp, r, spec);
        const double tv = max_state_tv(sol.policy, in.expert);
        ++solves;
        if (tv > worst) {
          worst = tv;
          worst_at = "mdp " + std::to_string(i) + " " + spec.describe();
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  detail = std::to_string(solves) + " solves, worst tv " + sci(worst) + " (" + worst_at + "), " +
           sci(secs) + " s";
  return worst <= 1e-4 && secs < 60.0;
}

// ---- criterion 2: Bregman-sum identity ---------------------------------------

bool check_bregman_sum(std::string& detail) {
  double worst = 0.0;
  double worst_zero = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const Instance in = random_instance(200 + i, 10, 4, 0.9);
    const RegularizerSpec spec = families(1.0 + 0.5 * static_cast<double>(i % 3))[i % 5];
    const Matrix t = exact_irl_reward(in.expert, spec);
    const double j = return_value(in.mdp, t, in.pi, spec);
    const VisitationDistribution vd = visitation(in.mdp, in.pi);
    double expected = 0.0;
    for (std::size_t s = 0; s < in.mdp.n_states; ++s) {
      expected += vd.state_mass(s) * bregman_discrete(in.pi.row(s), in.expert.row(s), spec);
    }
    expected *= -1.0 / (1.0 - in.mdp.gamma);
    worst = std::max(worst, std::abs(j - expected));
    worst_zero = std::max(worst_zero, std::abs(return_value(in.mdp, t, in.expert, spec)));
  }
  detail = "worst |J + sum D| " + sci(worst) + ", worst |J(pi_E)| " + sci(worst_zero);
  return worst <= 1e-8 && worst_zero <= 1e-10;
}

// ---- criterion 3: shaping invariance -----------------------------------------

bool check_shaping(std::string& detail) {
  double worst = 0.0;
  std::mt19937_64 rng(300);
  std::uniform_real_distribution<double> pot(-5.0, 5.0);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const Instance in = random_instance(300 + i, 12, 4, 0.9);
    const RegularizerSpec spec = families(1.0)[i % 5];
    const Matrix& r = in.mdp.require_reward();
    const ValueSolution base = regularized_value_iteration(in.mdp, r, spec);
    for (int k = 0; k < 20; ++k) {
      std::vector<double> phi(in.mdp.n_states);
      for (double& v : phi) v = pot(rng);
      const Matrix shaped = shape_reward(r, phi, in.mdp);
      const ValueSolution sol = regularized_value_iteration(in.mdp, shaped, spec);
      worst = std::max(worst, max_state_tv(sol.policy, base.policy));
    }
  }
  detail = "100 potentials, worst tv " + sci(worst);
  return worst <= 1e-6;
}

// ---- criterion 4: visitation gradient ----------------------------------------

bool check_visitation_gradient(std::string& detail) {
  double worst = 0.0;
  std::mt19937_64 rng(400);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::uniform_int_distribution<std::size_t> dim(2, 6);
  for (const auto& spec : families(1.0)) {
    for (int k = 0; k < 20; ++k) {
      const std::size_t S = dim(rng);
      const std::size_t A = dim(rng);
      Matrix d(S, A);
      double total = 0.0;
      for (double& v : d.flat()) total += (v = unit(rng));
      for (double& v : d.flat()) v /= total;
      const Matrix fd = visitation_gradient_fd(d, spec);
      const Matrix t = exact_irl_reward(conditional_policy(d), spec);
      for (std::size_t i = 0; i < fd.flat().size(); ++i) {
        worst = std::max(worst, std::abs(fd.flat()[i] - t.flat()[i]));
      }
    }
  }
  detail = "100 tables, worst |fd - t| " + sci(worst);
  return worst <= 1e-5;
}

// ---- criterion 5: Geist equivalence ------------------------------------------

bool check_geist(std::string& detail) {
  double worst_r = 0.0;
  double worst_shape = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Instance in = random_instance(500 + i, 10, 4, 0.9);
    const RegularizerSpec spec = families(0.5 + static_cast<double>(i % 3))[i % 5];
    const GeistReward g = geist_reward(in.expert, in.mdp, spec);
    const Matrix t = exact_irl_reward(in.expert, spec);
    std::vector<double> neg(g.conjugate.size());
    for (std::size_t s = 0; s < neg.size(); ++s) neg[s] = -g.conjugate[s];
    const Matrix shaped = shape_reward(g.r_tilde, neg, in.mdp);
    for (std::size_t k = 0; k < t.flat().size(); ++k) {
      worst_r = std::max(worst_r, std::abs(g.r_tilde.flat()[k] - t.flat()[k]));
      worst_shape = std::max(worst_shape, std::abs(g.rho.flat()[k] - shaped.flat()[k]));
    }
  }
  detail = "worst |r~ - t| " + sci(worst_r) + ", worst shaping residual " + sci(worst_shape);
  return worst_r <= 1e-10 && worst_shape <= 1e-10;
}

// ---- criterion 6: Gaussian closed forms ---------------------------------------

bool check_gaussian(std::string& detail) {
  std::mt19937_64 rng(600);
  std::uniform_real_distribution<double> mean(-1.0, 1.0);
  std::uniform_real_distribution<double> log_sd(-1.0, 0.5);
  const double qs[] = {1.25, 1.5, 2.0};
  double worst_sigma = 0.0;
  double worst_quad = 0.0;
  std::size_t mc_fail = 0;
  for (int i = 0; i < 50; ++i) {
    const double q = qs[i % 3];
    // Odd draws are two-dimensional and only checked against Monte Carlo.
    const std::size_t dim = i % 2 == 0 ? 1 : 2;
    DiagGaussian p;
    DiagGaussian ph;
    for (std::size_t d = 0; d < dim; ++d) {
      p.mean.push_back(mean(rng));
      p.stddev.push_back(std::exp(log_sd(rng)));
      ph.mean.push_back(mean(rng));
      ph.stddev.push_back(std::exp(log_sd(rng)));
    }
    const MonteCarlo mc{1'000'000, 6000 + static_cast<std::uint64_t>(i)};
    const double closed[3] = {gaussian_tsallis_entropy(p, q), gaussian_reward_baseline(p, q),
                              gaussian_bregman_tsallis(p, ph, q)};
    const OracleEstimate est[3] = {numeric_entropy_oracle(p, q, 1.0, mc),
                                   numeric_baseline_oracle(p, q, 1.0, mc),
                                   numeric_bregman_oracle(p, ph, q, mc)};
    for (int k = 0; k < 3; ++k) {
      const double z = std::abs(closed[k] - est[k].value) / *est[k].std_error;
      worst_sigma = std::max(worst_sigma, z);
      if (z > 3.0) ++mc_fail;
    }
    if (dim == 1) {
      const OracleEstimate quad[3] = {numeric_entropy_oracle(p, q, 1.0, Quadrature{}),
                                      numeric_baseline_oracle(p, q, 1.0, Quadrature{}),
                                      numeric_bregman_oracle(p, ph, q, Quadrature{})};
      for (int k = 0; k < 3; ++k) worst_quad = std::max(worst_quad, std::abs(closed[k] - quad[k].value));
    }
  }
  const double known = gaussian_tsallis_entropy(gaussian_1d(0.0, 1.0), 2.0);
  const double known_err = std::abs(known - (1.0 - 1.0 / (2.0 * std::sqrt(std::numbers::pi))));
  detail = "MC worst " + sci(worst_sigma) + " sigma (" + std::to_string(mc_fail) +
           " of 150 beyond 3 sigma), quadrature worst " + sci(worst_quad) + ", T2(N(0,1)) err " +
           sci(known_err);
  return mc_fail == 0 && worst_quad <= 1e-6 && known_err <= 1e-10;
}

// ---- criterion 7: heatmap structure -------------------------------------------

bool check_heatmap(std::string& detail) {
  const DiagGaussian expert = gaussian_1d(0.0, std::exp(-3.0));
  const double qs[] = {1.0, 1.25, 1.5, 1.75, 2.0};
  std::vector<double> frac;
  std::optional<HeatmapGrid> grid_q1;
  for (double q : qs) {
    HeatmapGrid g = heatmap_grid(expert, -2.0, 2.0, -6.0, 0.0, 101, 101, q);
    frac.push_back(fraction_below(g, 0.1));
    if (q == 1.0) grid_q1 = std::move(g);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < frac.size(); ++i) monotone = monotone && frac[i] <= frac[i - 1];
  double kl_err = 0.0;
  for (std::size_t i = 0; i < grid_q1->mu.size(); ++i) {
    for (std::size_t j = 0; j < grid_q1->log_sigma.size(); ++j) {
      const double kl =
          gaussian_kl(gaussian_1d(grid_q1->mu[i], std::exp(grid_q1->log_sigma[j])), expert);
      kl_err = std::max(kl_err, std::abs(grid_q1->raw(i, j) - kl));
    }
  }
  std::ostringstream os;
  os << "fraction < 0.1 by q:";
  for (double f : frac) os << " " << sci(f);
  os << (monotone ? " (monotone)" : " (not monotone)") << ", q=1 vs KL " << sci(kl_err);
  detail = os.str();
  return monotone && kl_err <= 1e-10;
}

// ---- criterion 8: bandit reward recovery ---------------------------------------

// Largest |centered learned - centered ground truth| over the listed actions.
double centered_error(const Matrix& learned, const Matrix& truth, std::span<const std::size_t> actions) {
  const std::size_t A = learned.cols();
  double ml = 0.0;
  double mt = 0.0;
  for (std::size_t a = 0; a < A; ++a) {
    ml += learned(0, a);
    mt += truth(0, a);
  }
  ml /= static_cast<double>(A);
  mt /= static_cast<double>(A);
  double worst = 0.0;
  for (std::size_t a : actions) worst = std::max(worst, std::abs((learned(0, a) - ml) - (truth(0, a) - mt)));
  return worst;
}

struct BanditRun {
  Matrix learned;
  Matrix truth;
};

BanditRun bandit_run(BanditKind kind, TrainConfig cfg, std::uint64_t seed) {
  const Environment env = bandit_env(kind);
  cfg.seed = seed;
  DemoSet demos = sample_demos(env.mdp, *env.expert, kBanditDemos, 1000 + seed);
  const TrainResult res = rairl_train(env.mdp, demos, cfg);
  // The ground truth for the sparse expert keeps the finite f'(0+) limit.
  return {reward_table(res.model, cfg.reg), exact_irl_reward(*env.expert, cfg.reg)};
}

bool check_bandit(std::string& detail) {
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const std::vector<std::size_t> unsupported{0, 1};
  std::ostringstream os;

  std::size_t dense_ok = 0;
  double dense_worst = 0.0;
  for (std::uint64_t s = 0; s < kAcceptanceSeeds; ++s) {
    const BanditRun run = bandit_run(BanditKind::Dense, bandit_dense_config(), s);
    const double e = centered_error(run.learned, run.truth, all);
    dense_worst = std::max(dense_worst, e);
    if (e <= 0.05) ++dense_ok;
  }
  std::size_t dbm_ok = 0;
  double dbm_worst = 0.0;
  for (std::uint64_t s = 0; s < kAcceptanceSeeds; ++s) {
    const BanditRun run = bandit_run(BanditKind::Sparse, bandit_sparse_config(), s);
    const double e = centered_error(run.learned, run.truth, all);
    dbm_worst = std::max(dbm_worst, e);
    if (e <= 0.05) ++dbm_ok;
  }
  std::size_t nsm_ok = 0;
  double nsm_min_dev = std::numeric_limits<double>::infinity();
  TrainConfig nsm_cfg = bandit_sparse_config();
  nsm_cfg.model = RewardModelKind::NSM;
  for (std::uint64_t s = 0; s < kAcceptanceSeeds; ++s) {
    const BanditRun run = bandit_run(BanditKind::Sparse, nsm_cfg, s);
    // Both unsupported entries have to be off by more than 0.5.
    double dev = std::numeric_limits<double>::infinity();
    for (std::size_t a : unsupported) {
      const std::size_t one[] = {a};
      dev = std::min(dev, centered_error(run.learned, run.truth, one));
    }
    nsm_min_dev = std::min(nsm_min_dev, dev);
    if (dev > 0.5) ++nsm_ok;
  }
  os << "dense DBM " << dense_ok << "/5 within 0.05 (worst " << sci(dense_worst) << "); sparse DBM "
     << dbm_ok << "/5 (worst " << sci(dbm_worst) << "); sparse NSM " << nsm_ok
     << "/5 off by > 0.5 on unsupported actions (smallest deviation " << sci(nsm_min_dev) << ")";
  detail = os.str();
  return dense_ok == kAcceptanceSeeds && dbm_ok >= 4 && nsm_ok >= 4;
}

// ---- criterion 9: grid imitation -----------------------------------------------

bool check_grid(std::string& detail) {
  const Environment env = make_environment("bermuda:21x21");
  const TrainConfig base = grid_config();
  const RegularizerSpec& spec = base.reg;
  const TabularPolicy uniform = TabularPolicy::uniform(env.mdp.n_states, env.mdp.n_actions);
  std::ostringstream os;
  bool ok = true;
  for (std::uint64_t s = 0; s < kGridSeeds; ++s) {
    TrainConfig cfg = base;
    cfg.seed = s;
    const DemoSet demos = sample_demos(env.mdp, *env.expert, kGridDemos, 1000 + s);
    const TrainResult res = rairl_train(env.mdp, demos, cfg);
    const TabularPolicy bc = behavioral_cloning(demos, env.mdp.n_states, env.mdp.n_actions);
    // Each policy is scored on states from its own evaluation trajectories.
    auto score = [&](const TabularPolicy& pi) {
      const auto states = sample_trajectory_states(env.mdp, pi, cfg.eval_trajectories,
                                                   cfg.eval_horizon, 9000 + s);
      return mean_bregman(pi, *env.expert, states, spec);
    };
    const double d_rairl = score(res.policy);
    const double d_uniform = score(uniform);
    const double d_bc = score(bc);
    const bool seed_ok = d_rairl <= 0.2 * d_uniform && d_rairl <= 1.5 * d_bc;
    ok = ok && seed_ok;
    os << (s ? "; " : "") << "seed " << s << ": rairl " << sci(d_rairl) << " = " << sci(d_rairl / d_uniform)
       << " x uniform, " << sci(d_rairl / d_bc) << " x bc";
  }
  detail = os.str();
  return ok;
}

// ---- criterion 10: gradient hygiene --------------------------------------------

// max_i |g_i - fd_i| / max(1e-8, max_i |fd_i|)
template <class F>
double fd_relative_error(std::vector<double> x, std::span<const double> analytic, F&& f, double h) {
  double worst = 0.0;
  double scale = 1e-8;
  std::vector<double> fd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    fd[i] = (up - down) / (2.0 * h);
    scale = std::max(scale, std::abs(fd[i]));
  }
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(analytic[i] - fd[i]));
  return worst / scale;
}

bool check_gradients(std::string& detail, Clock::time_point suite_start) {
  std::mt19937_64 rng(1000);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> dim(2, 5);
  const double h = 1e-5;
  double worst_nsm = 0.0;
  double worst_dbm = 0.0;
  double worst_actor = 0.0;
  for (int point = 0; point < 100; ++point) {
    const std::size_t S = dim(rng);
    const std::size_t A = dim(rng);
    const RegularizerSpec spec = families(0.5 + 0.5 * static_cast<double>(point % 4))[point % 5];
    const TabularPolicy pi = random_interior_policy(rng, S, A);
    std::uniform_int_distribution<std::size_t> ps(0, S - 1);
    std::uniform_int_distribution<std::size_t> pa(0, A - 1);
    std::vector<StateAction> demos(16);
    std::vector<StateAction> rolls(16);
    for (auto& sa : demos) sa = {ps(rng), pa(rng)};
    for (auto& sa : rolls) sa = {ps(rng), pa(rng)};

    for (RewardModelKind kind : {RewardModelKind::NSM, RewardModelKind::DBM}) {
      RewardModel model = kind == RewardModelKind::NSM ? RewardModel::nsm(S, A) : RewardModel::dbm(S, A);
      std::vector<double> theta = model.parameters();
      for (double& v : theta) v = normal(rng);
      model.set_parameters(theta);
      const auto g = discriminator_gradient(model, demos, rolls, pi, spec);
      RewardModel probe = model;
      const double err = fd_relative_error(
          theta, g,
          [&](const std::vector<double>& x) {
            probe.set_parameters(x);
            return discriminator_objective(probe, demos, rolls, pi, spec);
          },
          h);
      (kind == RewardModelKind::NSM ? worst_nsm : worst_dbm) =
          std::max(kind == RewardModelKind::NSM ? worst_nsm : worst_dbm, err);
    }

    std::vector<double> logits(A);
    std::vector<double> q(A);
    for (double& v : logits) v = normal(rng);
    for (double& v : q) v = normal(rng);
    const auto g = actor_gradient(logits, q, spec);
    worst_actor = std::max(worst_actor,
                           fd_relative_error(logits, g,
                                             [&](const std::vector<double>& x) {
                                               return actor_objective(x, q, spec);
                                             },
                                             h));
  }
  const double suite_secs = seconds_since(suite_start);
  detail = "relative error NSM " + sci(worst_nsm) + ", DBM " + sci(worst_dbm) + ", actor " +
           sci(worst_actor) + "; suite time " + sci(suite_secs) + " s";
  return worst_nsm <= 1e-5 && worst_dbm <= 1e-5 && worst_actor <= 1e-5 && suite_secs < 600.0;
}

bool wanted(const ValidationOptions& options, const std::string& id) {
  return options.only.empty() ||
         std::find(options.only.begin(), options.only.end(), id) != options.only.end();
}

}  // namespace

TrainConfig bandit_dense_config() {
  TrainConfig c;
  c.reg = RegularizerSpec::shannon(1.0);
  c.model = RewardModelKind::DBM;
  c.iterations = 4000;
  c.rollout_steps_per_iter = 50;
  c.batch_size = 2000;
  c.rollout_buffer = 20'000;
  c.disc_lr = 0.05;
  c.eval_interval = 400;
  return c;
}

TrainConfig bandit_sparse_config() {
  TrainConfig c;
  c.reg = RegularizerSpec::tsallis(1.0, 2.0, 1.0);
  c.model = RewardModelKind::DBM;
  c.iterations = 20'000;
  c.rollout_steps_per_iter = 10;
  c.batch_size = 1000;
  c.rollout_buffer = 1000;
  c.disc_lr = 0.05;
  c.eval_interval = 2000;
  return c;
}

TrainConfig grid_config() {
  TrainConfig c;
  c.reg = RegularizerSpec::tsallis(1.0, 2.0, 1.0);
  c.model = RewardModelKind::DBM;
  c.iterations = 1000;
  c.rollout_steps_per_iter = 2000;
  c.batch_size = 5000;
  c.rollout_buffer = 20'000;
  c.disc_lr = 50.0;
  c.eval_interval = 100;
  return c;
}

std::vector<CheckResult> run_acceptance(const ValidationOptions& options) {
  const auto start = Clock::now();
  std::vector<CheckResult> out;
  auto emit = [&](CheckResult r) {
    if (options.sink) options.sink(r);
    out.push_back(std::move(r));
  };
  struct Entry {
    const char* id;
    const char* title;
    bool (*fn)(std::string&);
  };
  const Entry entries[] = {
      {"1", "IRL round trip", check_round_trip},
      {"2", "Bregman-sum identity", check_bregman_sum},
      {"3", "shaping invariance", check_shaping},
      {"4", "visitation gradient", check_visitation_gradient},
      {"5", "Geist equivalence", check_geist},
      {"6", "Gaussian closed forms", check_gaussian},
      {"7", "heatmap valley structure", check_heatmap},
      {"8", "bandit reward recovery", check_bandit},
      {"9", "grid imitation", check_grid},
  };
  for (const auto& e : entries) {
    if (wanted(options, e.id)) emit(run_check(e.id, e.title, e.fn));
  }
  if (wanted(options, "10")) {
    emit(run_check("10", "gradient hygiene",
                   [&](std::string& detail) { return check_gradients(detail, start); }));
  }
  return out;
}

std::vector<CheckResult> run_invariants(const CheckSink& sink) {
  std::vector<CheckResult> out;
  auto emit = [&](CheckResult r) {
    if (sink) sink(r);
    out.push_back(std::move(r));
  };

  emit(run_check("reg-inverse", "g inverts f' for every family", [](std::string& detail) {
    double worst = 0.0;
    for (const auto& spec : families(1.0)) {
      for (int i = 1; i < 200; ++i) {
        const double x = i / 200.0;
        worst = std::max(worst, std::abs(g_phi(spec, f_phi_prime(spec, x)) - x));
        if (!(f_phi_second(spec, x) < 0.0)) throw InvariantError(spec.describe() + " not concave");
      }
    }
    detail = "worst |g(f'(x)) - x| " + sci(worst);
    return worst <= 1e-9;
  }));

  emit(run_check("reg-sparsemax", "Tsallis k=1/2 policy is the simplex projection", [](std::string& detail) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    const RegularizerSpec spec = RegularizerSpec::tsallis(0.5, 2.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      std::vector<double> q(2 + t % 6);
      for (double& v : q) v = 2.0 * normal(rng);
      // Sort-and-threshold projection.
      std::vector<double> z = q;
      std::sort(z.rbegin(), z.rend());
      double cum = 0.0;
      double tau = 0.0;
      for (std::size_t k = 0; k < z.size(); ++k) {
        cum += z[k];
        const double cand = (cum - 1.0) / static_cast<double>(k + 1);
        if (z[k] - cand > 0.0) tau = cand;
      }
      const StatePolicy sp = optimal_state_policy(q, spec);
      for (std::size_t a = 0; a < q.size(); ++a) {
        worst = std::max(worst, std::abs(sp.p[a] - std::max(q[a] - tau, 0.0)));
      }
    }
    detail = "worst deviation " + sci(worst);
    return worst <= 1e-9;
  }));

  emit(run_check("kernels", "SIMD kernels agree with scalar", [](std::string& detail) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto& scalar = kernels::table(kernels::Isa::Scalar);
    const auto& active = kernels::active();
    double worst = 0.0;
    for (std::size_t n : {1, 3, 4, 7, 16, 33, 257}) {
      std::vector<double> x(n);
      std::vector<double> y(n);
      for (double& v : x) v = normal(rng);
      for (double& v : y) v = normal(rng);
      worst = std::max(worst, std::abs(scalar.dot(x.data(), y.data(), n) - active.dot(x.data(), y.data(), n)));
    }
    detail = std::string("active ") + std::string(kernels::isa_name(active.isa)) + ", worst dot diff " + sci(worst);
    return worst <= 1e-12;
  }));

  emit(run_check("mdp-corrupt", "corrupted transition row is reported with its location",
                 [](std::string& detail) {
                   TabularMdp m = random_mdp(13, 4, 3, 0.9);
                   m.transition(m.pair_index(2, 1), 0) += 0.5;
                   try {
                     m.validate();
                   } catch (const InvariantError& e) {
                     detail = e.what();
                     return detail.find("s=2, a=1") != std::string::npos;
                   }
                   detail = "not detected";
                   return false;
                 }));

  emit(run_check("mdp-visitation", "visitation is a distribution and matches the sampler",
                 [](std::string& detail) {
                   const TabularMdp m = random_mdp(14, 6, 3, 0.9);
                   std::mt19937_64 rng(15);
                   const TabularPolicy pi = random_interior_policy(rng, 6, 3);
                   const VisitationDistribution vd = visitation(m, pi);
                   double total = 0.0;
                   for (double v : vd.d.flat()) total += v;
                   VisitationSampler sampler(m, 16);
                   Matrix counts(6, 3);
                   const std::size_t n = 400'000;
                   for (std::size_t i = 0; i < n; ++i) {
                     const Transition tr = sampler.step(pi);
                     counts(tr.s, tr.a) += 1.0 / static_cast<double>(n);
                   }
                   const double tv = total_variation(counts.flat(), vd.d.flat());
                   detail = "mass " + sci(total) + ", sampler tv " + sci(tv);
                   return std::abs(total - 1.0) <= 1e-12 && tv <= 0.01;
                 }));

  emit(run_check("mdp-solvers", "value and policy iteration agree", [](std::string& detail) {
    double worst = 0.0;
    for (const auto& spec : families(1.0)) {
      const TabularMdp m = random_mdp(17, 8, 3, 0.95);
      const auto vi = regularized_value_iteration(m, spec);
      const auto pi = regularized_policy_iteration(m, m.require_reward(), spec);
      for (std::size_t s = 0; s < m.n_states; ++s) {
        worst = std::max(worst, std::abs(vi.v_values[s] - pi.v_values[s]));
      }
    }
    detail = "worst |V_vi - V_pi| " + sci(worst);
    return worst <= 1e-8;
  }));

  emit(run_check("irl-baseline", "E_pi[t] equals Omega(pi) in every state", [](std::string& detail) {
    std::mt19937_64 rng(18);
    double worst = 0.0;
    for (const auto& spec : families(2.0)) {
      const TabularPolicy pi = random_interior_policy(rng, 5, 4);
      const Matrix t = exact_irl_reward(pi, spec);
      for (std::size_t s = 0; s < 5; ++s) {
        const double e = kernels::dot(pi.row(s), t.row(s));
        worst = std::max(worst, std::abs(e - omega(spec, pi.row(s))));
      }
    }
    detail = "worst residual " + sci(worst);
    return worst <= 1e-12;
  }));

  emit(run_check("div-bregman", "Bregman divergence is nonnegative and Shannon gives KL",
                 [](std::string& detail) {
                   std::mt19937_64 rng(19);
                   double min_d = std::numeric_limits<double>::infinity();
                   double kl_err = 0.0;
                   for (int t = 0; t < 100; ++t) {
                     const TabularPolicy a = random_interior_policy(rng, 1, 5);
                     const TabularPolicy b = random_interior_policy(rng, 1, 5);
                     for (const auto& spec : families(1.0)) {
                       min_d = std::min(min_d, bregman_discrete(a.row(0), b.row(0), spec));
                     }
                     double kl = 0.0;
                     for (std::size_t k = 0; k < 5; ++k) kl += a.probs(0, k) * std::log(a.probs(0, k) / b.probs(0, k));
                     kl_err = std::max(kl_err, std::abs(kl - bregman_discrete(a.row(0), b.row(0), RegularizerSpec::shannon())));
                   }
                   detail = "min divergence " + sci(min_d) + ", KL error " + sci(kl_err);
                   return min_d >= -1e-12 && kl_err <= 1e-12;
                 }));

  emit(run_check("envs-demos", "bandit demo frequencies follow the expert", [](std::string& detail) {
    const Environment env = bandit_env(BanditKind::Dense);
    const DemoSet demos = sample_demos(env.mdp, *env.expert, 100'000, 20);
    const TabularPolicy bc = behavioral_cloning(demos, 1, 4);
    const double tv = total_variation(bc.row(0), env.expert->row(0));
    detail = "tv " + sci(tv);
    return tv <= 0.01;
  }));

  emit(run_check("rairl-lemma", "model at the expert reward recovers the expert in one step",
                 [](std::string& detail) {
                   const TabularMdp m = random_mdp(21, 8, 4, 0.9);
                   std::mt19937_64 rng(22);
                   const TabularPolicy expert = random_interior_policy(rng, 8, 4);
                   const RegularizerSpec spec = RegularizerSpec::tsallis(1.0, 2.0, 1.0);
                   RewardModel model = RewardModel::nsm(8, 4);
                   model.nsm_table = exact_irl_reward(expert, spec);
                   const TabularPolicy pi = policy_improvement_exact(m, reward_table(model, spec), spec);
                   const double tv = max_state_tv(pi, expert);
                   // Balanced discriminator at the stationary point.
                   std::vector<StateAction> batch;
                   for (std::size_t s = 0; s < 8; ++s) batch.push_back({s, s % 4});
                   const double obj = discriminator_objective(model, batch, batch, expert, spec);
                   detail = "tv " + sci(tv) + ", objective " + sci(obj);
                   return tv <= 1e-6 && std::abs(obj - 2.0 * std::log(0.5)) <= 1e-12;
                 }));

  emit(run_check("rairl-determinism", "fixed seed gives identical metrics", [](std::string& detail) {
    const Environment env = make_environment("random:seed=3,s=6,a=3");
    const DemoSet demos = sample_demos(env.mdp, *env.expert, 2000, 4);
    TrainConfig cfg;
    cfg.iterations = 60;
    cfg.eval_interval = 20;
    cfg.seed = 5;
    const auto a = rairl_train(env.mdp, demos, cfg);
    const auto b = rairl_train(env.mdp, demos, cfg);
    bool same = a.model.parameters() == b.model.parameters();
    for (std::size_t i = 0; i < a.metrics.rows.size(); ++i) {
      same = same && a.metrics.rows[i].mean_bregman == b.metrics.rows[i].mean_bregman;
    }
    // DBM policy rows stay normalized.
    const TabularPolicy p = a.model.dbm_policy();
    p.validate();
    detail = same ? "identical" : "runs differ";
    return same;
  }));

  return out;
}

std::string format_check(const CheckResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(18) << r.id << " " << r.title
     << "  (" << r.detail << "; " << std::fixed << std::setprecision(1) << r.seconds << " s)";
  return os.str();
}

}  // namespace regmdp
