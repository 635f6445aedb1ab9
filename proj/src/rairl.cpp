#include "regmdp/rairl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "regmdp/divergence.hpp"
#include "regmdp/error.hpp"
#include "regmdp/irl.hpp"
#include "regmdp/kernels.hpp"
#include "regmdp/probability.hpp"

namespace regmdp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kPolicyIterationMaxStates = 1024;

// log sigmoid(x), stable for large |x|.
double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -lambda * f''(p) * p, the factor in d r / d logit. Shannon collapses to lambda.
double dbm_slope(const RegularizerSpec& spec, double p) {
  if (spec.family == Family::Shannon) return spec.lambda;
  if (p <= 0.0) return 0.0;
  return -spec.lambda * f_phi_second(spec, p) * p;
}

void check_pairs(const RewardModel& model, std::span<const StateAction> batch) {
  for (const auto& sa : batch) {
    if (sa.s >= model.n_states() || sa.a >= model.n_actions()) {
      throw InvariantError("state-action pair out of range");
    }
  }
}

// Weighted accumulation of d r(s,a) / d params into grad.
void add_reward_gradient(const RewardModel& model, const RegularizerSpec& spec,
                         const std::vector<std::vector<double>>& probs, std::size_t s,
                         std::size_t a, double w, std::vector<double>& grad) {
  const std::size_t A = model.n_actions();
  if (model.kind == RewardModelKind::NSM) {
    grad[s * A + a] += w;
    return;
  }
  const auto& p = probs[s];
  const double c = w * dbm_slope(spec, p[a]);
  for (std::size_t j = 0; j < A; ++j) {
    grad[s * A + j] += c * ((j == a ? 1.0 : 0.0) - p[j]);
  }
  grad[model.n_states() * A + s] += w;
}

std::vector<std::vector<double>> dbm_rows(const RewardModel& model) {
  std::vector<std::vector<double>> rows;
  if (model.kind != RewardModelKind::DBM) return rows;
  rows.reserve(model.n_states());
  for (std::size_t s = 0; s < model.n_states(); ++s) rows.push_back(softmax(model.dbm_logits.row(s)));
  return rows;
}

}  // namespace

std::string_view reward_model_name(RewardModelKind kind) {
  return kind == RewardModelKind::NSM ? "nsm" : "dbm";
}

RewardModelKind parse_reward_model(std::string_view name) {
  if (name == "nsm") return RewardModelKind::NSM;
  if (name == "dbm") return RewardModelKind::DBM;
  throw ParameterError("unknown reward model '" + std::string(name) + "' (nsm or dbm)");
}

std::string_view policy_mode_name(PolicyMode mode) {
  return mode == PolicyMode::ExactVI ? "exact_vi" : "sampled_rac";
}

PolicyMode parse_policy_mode(std::string_view name) {
  if (name == "exact_vi") return PolicyMode::ExactVI;
  if (name == "sampled_rac") return PolicyMode::SampledRAC;
  throw ParameterError("unknown policy mode '" + std::string(name) +
                       "' (exact_vi or sampled_rac)");
}

RewardModel RewardModel::nsm(std::size_t n_states, std::size_t n_actions) {
  RewardModel m;
  m.kind = RewardModelKind::NSM;
  m.nsm_table = Matrix(n_states, n_actions);
  return m;
}

RewardModel RewardModel::dbm(std::size_t n_states, std::size_t n_actions) {
  RewardModel m;
  m.kind = RewardModelKind::DBM;
  m.dbm_logits = Matrix(n_states, n_actions);
  m.dbm_baseline.assign(n_states, 0.0);
  return m;
}

std::size_t RewardModel::n_states() const {
  return kind == RewardModelKind::NSM ? nsm_table.rows() : dbm_logits.rows();
}

std::size_t RewardModel::n_actions() const {
  return kind == RewardModelKind::NSM ? nsm_table.cols() : dbm_logits.cols();
}

std::vector<double> RewardModel::parameters() const {
  if (kind == RewardModelKind::NSM) return {nsm_table.flat().begin(), nsm_table.flat().end()};
  std::vector<double> out(dbm_logits.flat().begin(), dbm_logits.flat().end());
  out.insert(out.end(), dbm_baseline.begin(), dbm_baseline.end());
  return out;
}

void RewardModel::set_parameters(std::span<const double> params) {
  if (kind == RewardModelKind::NSM) {
    if (params.size() != nsm_table.size()) throw InvariantError("NSM parameter size mismatch");
    std::copy(params.begin(), params.end(), nsm_table.flat().begin());
    return;
  }
  if (params.size() != dbm_logits.size() + dbm_baseline.size()) {
    throw InvariantError("DBM parameter size mismatch");
  }
  std::copy(params.begin(), params.begin() + dbm_logits.size(), dbm_logits.flat().begin());
  std::copy(params.begin() + dbm_logits.size(), params.end(), dbm_baseline.begin());
}

TabularPolicy RewardModel::dbm_policy() const {
  if (kind != RewardModelKind::DBM) throw InvariantError("dbm_policy on an NSM model");
  TabularPolicy pi{Matrix(dbm_logits.rows(), dbm_logits.cols())};
  for (std::size_t s = 0; s < dbm_logits.rows(); ++s) softmax_into(dbm_logits.row(s), pi.probs.row(s));
  return pi;
}

void RewardModel::validate() const {
  if (kind == RewardModelKind::NSM) {
    if (nsm_table.empty() || !dbm_logits.empty() || !dbm_baseline.empty()) {
      throw InvariantError("NSM model must hold only a reward table");
    }
  } else {
    if (dbm_logits.empty() || !nsm_table.empty() || dbm_baseline.size() != dbm_logits.rows()) {
      throw InvariantError("DBM model must hold logits and one baseline per state");
    }
  }
  for (double v : parameters()) {
    if (!std::isfinite(v)) throw NumericError("reward model has a non-finite parameter");
  }
}

double reward_of_model(const RewardModel& model, const RegularizerSpec& spec, std::size_t s,
                       std::size_t a) {
  if (s >= model.n_states() || a >= model.n_actions()) throw InvariantError("reward index out of range");
  if (model.kind == RewardModelKind::NSM) return model.nsm_table(s, a);
  const auto p = softmax(model.dbm_logits.row(s));
  return -spec.lambda * f_phi_prime_extended(spec, p[a]) + model.dbm_baseline[s];
}

Matrix reward_table(const RewardModel& model, const RegularizerSpec& spec) {
  if (model.kind == RewardModelKind::NSM) return model.nsm_table;
  Matrix r(model.n_states(), model.n_actions());
  for (std::size_t s = 0; s < model.n_states(); ++s) {
    const auto p = softmax(model.dbm_logits.row(s));
    for (std::size_t a = 0; a < model.n_actions(); ++a) {
      r(s, a) = -spec.lambda * f_phi_prime_extended(spec, p[a]) + model.dbm_baseline[s];
    }
  }
  return r;
}

double discriminator_logit(const RewardModel& model, const TabularPolicy& policy,
                           const RegularizerSpec& spec, std::size_t s, std::size_t a) {
  const auto t = exact_irl_reward_row(policy.row(s), spec);
  return reward_of_model(model, spec, s, a) - t[a];
}

Matrix discriminator_logits(const RewardModel& model, const TabularPolicy& policy,
                            const RegularizerSpec& spec) {
  Matrix logits = reward_table(model, spec);
  const Matrix t = exact_irl_reward(policy, spec);
  for (std::size_t i = 0; i < logits.size(); ++i) logits.flat()[i] -= t.flat()[i];
  return logits;
}

double discriminator_objective(const RewardModel& model, std::span<const StateAction> demos,
                               std::span<const StateAction> rollouts,
                               const TabularPolicy& policy, const RegularizerSpec& spec) {
  if (demos.empty() || rollouts.empty()) throw InvariantError("discriminator batches must be nonempty");
  check_pairs(model, demos);
  check_pairs(model, rollouts);
  const Matrix logits = discriminator_logits(model, policy, spec);
  double pos = 0.0;
  for (const auto& sa : demos) pos += log_sigmoid(logits(sa.s, sa.a));
  double neg = 0.0;
  for (const auto& sa : rollouts) neg += log_sigmoid(-logits(sa.s, sa.a));
  return pos / static_cast<double>(demos.size()) + neg / static_cast<double>(rollouts.size());
}

std::vector<double> discriminator_gradient(const RewardModel& model,
                                           std::span<const StateAction> demos,
                                           std::span<const StateAction> rollouts,
                                           const TabularPolicy& policy,
                                           const RegularizerSpec& spec) {
  if (demos.empty() || rollouts.empty()) throw InvariantError("discriminator batches must be nonempty");
  check_pairs(model, demos);
  check_pairs(model, rollouts);
  const Matrix logits = discriminator_logits(model, policy, spec);
  const auto probs = dbm_rows(model);
  std::vector<double> grad(model.parameters().size(), 0.0);
  const double wd = 1.0 / static_cast<double>(demos.size());
  const double wr = 1.0 / static_cast<double>(rollouts.size());
  // d log sigmoid(l) / dl = 1 - sigmoid(l); d log(1 - sigmoid(l)) / dl = -sigmoid(l).
  for (const auto& sa : demos) {
    add_reward_gradient(model, spec, probs, sa.s, sa.a, wd * (1.0 - sigmoid(logits(sa.s, sa.a))), grad);
  }
  for (const auto& sa : rollouts) {
    add_reward_gradient(model, spec, probs, sa.s, sa.a, -wr * sigmoid(logits(sa.s, sa.a)), grad);
  }
  return grad;
}

double discriminator_step(RewardModel& model, std::span<const StateAction> demos,
                          std::span<const StateAction> rollouts, const TabularPolicy& policy,
                          const RegularizerSpec& spec, double lr) {
  const double before = discriminator_objective(model, demos, rollouts, policy, spec);
  const auto grad = discriminator_gradient(model, demos, rollouts, policy, spec);
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += lr * grad[i];
  model.set_parameters(params);
  return before;
}

double actor_objective(std::span<const double> logits, std::span<const double> q,
                       const RegularizerSpec& spec) {
  const auto p = softmax(logits);
  return kernels::dot(p, q) - omega(spec, p);
}

std::vector<double> actor_gradient(std::span<const double> logits, std::span<const double> q,
                                   const RegularizerSpec& spec) {
  const auto p = softmax(logits);
  // d/dp_a [<p, q> - Omega(p)] = q_a + lambda f'(p_a); chain through softmax.
  std::vector<double> g(p.size(), 0.0);
  double mean = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] == 0.0) continue;
    g[a] = q[a] + spec.lambda * f_phi_prime(spec, p[a]);
    mean += p[a] * g[a];
  }
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] > 0.0) out[a] = p[a] * (g[a] - mean);
  }
  return out;
}

RegularizedActorCritic::RegularizedActorCritic(std::size_t n_states, std::size_t n_actions,
                                               RegularizerSpec spec, double critic_lr,
                                               double actor_lr)
    : spec_(spec),
      critic_lr_(critic_lr),
      actor_lr_(actor_lr),
      q_(n_states, n_actions),
      logits_(n_states, n_actions) {}

TabularPolicy RegularizedActorCritic::policy() const {
  TabularPolicy pi{Matrix(logits_.rows(), logits_.cols())};
  for (std::size_t s = 0; s < logits_.rows(); ++s) softmax_into(logits_.row(s), pi.probs.row(s));
  return pi;
}

double RegularizedActorCritic::state_value(std::size_t s) const {
  return actor_objective(logits_.row(s), q_.row(s), spec_);
}

void RegularizedActorCritic::critic_update(const Matrix& reward, std::span<const Transition> batch,
                                           double gamma) {
  for (const auto& tr : batch) {
    const double target = reward(tr.s, tr.a) + gamma * state_value(tr.next);
    q_(tr.s, tr.a) += critic_lr_ * (target - q_(tr.s, tr.a));
  }
}

void RegularizedActorCritic::actor_update(std::span<const std::size_t> states) {
  for (std::size_t s : states) {
    const auto g = actor_gradient(logits_.row(s), q_.row(s), spec_);
    kernels::axpy(actor_lr_, g, logits_.row(s));
  }
}

TabularPolicy policy_improvement_exact(const TabularMdp& mdp, const Matrix& reward,
                                       const RegularizerSpec& spec, std::vector<double>* warm_v) {
  ValueIterationOptions opts;
  if (warm_v && warm_v->size() == mdp.n_states) opts.initial_v = *warm_v;
  // Direct solves are cheap for small state spaces and immune to gamma -> 1;
  // larger problems use warm-started value iteration.
  ValueSolution sol = mdp.n_states <= kPolicyIterationMaxStates
                          ? regularized_policy_iteration(mdp, reward, spec, opts)
                          : regularized_value_iteration(mdp, reward, spec, opts);
  if (warm_v) *warm_v = sol.v_values;
  return std::move(sol.policy);
}

void TrainConfig::validate() const {
  if (iterations == 0 || batch_size == 0 || rollout_steps_per_iter == 0 || rollout_buffer == 0 ||
      eval_interval == 0 || disc_steps_per_iter == 0 || policy_steps_per_iter == 0) {
    throw ParameterError("training counts must be positive");
  }
  if (!(disc_lr > 0.0) || !(policy_lr > 0.0) || !(critic_lr > 0.0)) {
    throw ParameterError("learning rates must be positive");
  }
  if (eval_trajectories == 0 || eval_horizon == 0) throw ParameterError("evaluation sizes must be positive");
  reg.validate();
  for (const auto& p : probes) p.validate();
}

std::string probe_label(const RegularizerSpec& spec) {
  switch (spec.family) {
    case Family::Shannon: return "q1";
    case Family::Tsallis: {
      std::ostringstream os;
      os << "q" << spec.q;
      return os.str();
    }
    default: return std::string(family_name(spec.family));
  }
}

TrainResult rairl_train(const TabularMdp& mdp, const DemoSet& demos, const TrainConfig& config,
                        const MetricsSink& sink) {
  config.validate();
  mdp.validate();
  if (demos.pairs.empty()) throw InvariantError("rairl_train: no demonstrations");
  const std::size_t S = mdp.n_states;
  const std::size_t A = mdp.n_actions;
  for (const auto& sa : demos.pairs) {
    if (sa.s >= S || sa.a >= A) throw InvariantError("demonstration pair out of range");
  }
  const RegularizerSpec& spec = config.reg;
  const std::vector<RegularizerSpec> probes =
      config.probes.empty() ? std::vector<RegularizerSpec>{spec} : config.probes;

  TrainResult result;
  result.model = config.model == RewardModelKind::NSM ? RewardModel::nsm(S, A) : RewardModel::dbm(S, A);
  for (const auto& p : probes) result.metrics.probe_names.push_back(probe_label(p));

  std::mt19937_64 rng(config.seed);
  VisitationSampler sampler(mdp, config.seed ^ 0x5851f42d4c957f2dULL);

  // Evaluation helpers that depend only on the expert.
  const TabularPolicy* expert = demos.expert_policy ? &*demos.expert_policy : nullptr;
  std::vector<double> expert_state_mass;
  std::optional<Matrix> expert_reward;
  if (expert) {
    expert_state_mass = state_visitation(mdp, *expert);
    try {
      expert_reward = exact_irl_reward(*expert, spec);
    } catch (const DomainError&) {
      // Shannon with a sparse expert: no finite reward to score returns with.
    }
  }

  std::vector<double> warm_v;
  std::optional<RegularizedActorCritic> rac;
  TabularPolicy policy = TabularPolicy::uniform(S, A);
  if (config.policy_mode == PolicyMode::ExactVI) {
    policy = policy_improvement_exact(mdp, reward_table(result.model, spec), spec, &warm_v);
  } else {
    rac.emplace(S, A, spec, config.critic_lr, config.policy_lr);
    policy = rac->policy();
  }

  std::vector<StateAction> buffer;
  buffer.reserve(std::min(config.rollout_buffer, config.iterations * config.rollout_steps_per_iter));
  std::size_t buffer_head = 0;
  std::vector<Transition> fresh(config.rollout_steps_per_iter);
  std::vector<StateAction> demo_batch(config.batch_size);
  std::vector<StateAction> roll_batch(config.batch_size);
  std::uniform_int_distribution<std::size_t> pick_demo(0, demos.pairs.size() - 1);

  for (std::size_t it = 1; it <= config.iterations; ++it) {
    for (auto& tr : fresh) {
      tr = sampler.step(policy);
      const StateAction sa{tr.s, tr.a};
      if (buffer.size() < config.rollout_buffer) {
        buffer.push_back(sa);
      } else {
        buffer[buffer_head] = sa;
        buffer_head = (buffer_head + 1) % config.rollout_buffer;
      }
    }

    double objective = 0.0;
    std::uniform_int_distribution<std::size_t> pick_roll(0, buffer.size() - 1);
    for (std::size_t k = 0; k < config.disc_steps_per_iter; ++k) {
      for (auto& sa : demo_batch) sa = demos.pairs[pick_demo(rng)];
      for (auto& sa : roll_batch) sa = buffer[pick_roll(rng)];
      objective = discriminator_step(result.model, demo_batch, roll_batch, policy, spec, config.disc_lr);
    }

    const Matrix reward = reward_table(result.model, spec);
    for (std::size_t k = 0; k < config.policy_steps_per_iter; ++k) {
      if (config.policy_mode == PolicyMode::ExactVI) {
        policy = policy_improvement_exact(mdp, reward, spec, &warm_v);
      } else {
        rac->critic_update(reward, fresh, mdp.gamma);
        std::set<std::size_t> seen;
        for (const auto& tr : fresh) seen.insert(tr.s);
        const std::vector<std::size_t> states(seen.begin(), seen.end());
        rac->actor_update(states);
        policy = rac->policy();
      }
    }

    if (it % config.eval_interval == 0 || it == config.iterations) {
      MetricsRow row;
      row.iter = it;
      row.disc_loss = -objective;
      const auto eval_states = sample_trajectory_states(
          mdp, policy, config.eval_trajectories, config.eval_horizon, config.seed * 1000003ULL + it);
      if (expert) {
        for (const auto& probe : probes) {
          try {
            row.mean_bregman.push_back(mean_bregman(policy, *expert, eval_states, probe));
          } catch (const DomainError&) {
            row.mean_bregman.push_back(kInf);
          }
        }
        double tv = 0.0;
        double mass = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
          tv += expert_state_mass[s] * total_variation(policy.row(s), expert->row(s));
          mass += expert_state_mass[s];
        }
        row.policy_tv = tv / mass;
      } else {
        row.mean_bregman.assign(probes.size(), kNaN);
        row.policy_tv = kNaN;
      }
      if (mdp.reward) {
        row.episodic_return = return_value(mdp, policy, spec);
      } else if (expert_reward) {
        row.episodic_return = return_value(mdp, *expert_reward, policy, spec);
      } else {
        row.episodic_return = kNaN;
      }
      result.metrics.rows.push_back(row);
      if (sink) sink(row);
    }
  }
  result.policy = std::move(policy);
  return result;
}

TabularPolicy behavioral_cloning(const DemoSet& demos, std::size_t n_states,
                                 std::size_t n_actions, double smoothing) {
  if (demos.pairs.empty()) throw InvariantError("behavioral_cloning: no demonstrations");
  if (smoothing < 0.0) throw ParameterError("behavioral_cloning: smoothing must be >= 0");
  Matrix counts(n_states, n_actions, smoothing);
  for (const auto& sa : demos.pairs) {
    if (sa.s >= n_states || sa.a >= n_actions) throw InvariantError("demonstration pair out of range");
    counts(sa.s, sa.a) += 1.0;
  }
  TabularPolicy pi{Matrix(n_states, n_actions)};
  for (std::size_t s = 0; s < n_states; ++s) {
    double total = 0.0;
    for (double c : counts.row(s)) total += c;
    for (std::size_t a = 0; a < n_actions; ++a) {
      pi.probs(s, a) = total > 0.0 ? counts(s, a) / total : 1.0 / static_cast<double>(n_actions);
    }
  }
  return pi;
}

}  // namespace regmdp
