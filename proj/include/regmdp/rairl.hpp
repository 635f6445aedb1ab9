#pragma once

// Adversarial IRL with a regularized discriminator on tabular problems.
//
// The discriminator is D(s,a) = sigmoid(r_theta(s,a) - t(s,a; pi)) where t is
// the closed-form IRL reward of the current learner. Two reward models:
//   NSM  r_theta is a free table.
//   DBM  r_theta(s,a) = -lambda f'(softmax(logits(s))[a]) + baseline(s).

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "regmdp/envs.hpp"
#include "regmdp/matrix.hpp"
#include "regmdp/mdp.hpp"
#include "regmdp/regularizer.hpp"

namespace regmdp {

enum class RewardModelKind { NSM, DBM };
std::string_view reward_model_name(RewardModelKind kind);
RewardModelKind parse_reward_model(std::string_view name);

struct RewardModel {
  RewardModelKind kind = RewardModelKind::DBM;
  Matrix nsm_table;                   // NSM only
  Matrix dbm_logits;                  // DBM only
  std::vector<double> dbm_baseline;   // DBM only

  static RewardModel nsm(std::size_t n_states, std::size_t n_actions);
  static RewardModel dbm(std::size_t n_states, std::size_t n_actions);

  std::size_t n_states() const;
  std::size_t n_actions() const;

  // Flat parameter vector: NSM table, or DBM logits followed by baselines.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  // Row softmax of the DBM logits.
  TabularPolicy dbm_policy() const;
  void validate() const;
};

double reward_of_model(const RewardModel& model, const RegularizerSpec& spec, std::size_t s,
                       std::size_t a);
Matrix reward_table(const RewardModel& model, const RegularizerSpec& spec);

// r_theta(s,a) - t(s,a; policy).
double discriminator_logit(const RewardModel& model, const TabularPolicy& policy,
                           const RegularizerSpec& spec, std::size_t s, std::size_t a);
Matrix discriminator_logits(const RewardModel& model, const TabularPolicy& policy,
                            const RegularizerSpec& spec);

// Minibatch objective mean log D over demos + mean log(1 - D) over rollouts.
double discriminator_objective(const RewardModel& model, std::span<const StateAction> demos,
                               std::span<const StateAction> rollouts,
                               const TabularPolicy& policy, const RegularizerSpec& spec);

// Gradient of discriminator_objective with respect to model.parameters().
std::vector<double> discriminator_gradient(const RewardModel& model,
                                           std::span<const StateAction> demos,
                                           std::span<const StateAction> rollouts,
                                           const TabularPolicy& policy,
                                           const RegularizerSpec& spec);

// One ascent step with learning rate lr. Returns the objective before the step.
double discriminator_step(RewardModel& model, std::span<const StateAction> demos,
                          std::span<const StateAction> rollouts, const TabularPolicy& policy,
                          const RegularizerSpec& spec, double lr);

enum class PolicyMode { ExactVI, SampledRAC };
std::string_view policy_mode_name(PolicyMode mode);
PolicyMode parse_policy_mode(std::string_view name);

// Per-state actor objective sum_a pi(a) q(a) - Omega(pi) with pi = softmax(logits),
// and its gradient in the logits.
double actor_objective(std::span<const double> logits, std::span<const double> q,
                       const RegularizerSpec& spec);
std::vector<double> actor_gradient(std::span<const double> logits, std::span<const double> q,
                                   const RegularizerSpec& spec);

// Tabular regularized actor-critic: TD critic with the soft evaluation target
// and softmax-logit actor ascent.
class RegularizedActorCritic {
 public:
  RegularizedActorCritic(std::size_t n_states, std::size_t n_actions, RegularizerSpec spec,
                         double critic_lr, double actor_lr);

  TabularPolicy policy() const;
  const Matrix& q() const { return q_; }
  const Matrix& logits() const { return logits_; }

  // Regularized state value <pi(s), Q(s)> - Omega(pi(s)).
  double state_value(std::size_t s) const;
  void critic_update(const Matrix& reward, std::span<const Transition> batch, double gamma);
  // One ascent step on every listed state.
  void actor_update(std::span<const std::size_t> states);

 private:
  RegularizerSpec spec_;
  double critic_lr_;
  double actor_lr_;
  Matrix q_;
  Matrix logits_;
};

// Exact optimizer of the regularized objective for the given reward.
TabularPolicy policy_improvement_exact(const TabularMdp& mdp, const Matrix& reward,
                                       const RegularizerSpec& spec,
                                       std::vector<double>* warm_v = nullptr);

struct TrainConfig {
  std::size_t iterations = 2000;
  std::size_t batch_size = 256;
  std::size_t rollout_steps_per_iter = 100;
  std::size_t rollout_buffer = 50'000;
  std::size_t disc_steps_per_iter = 1;
  std::size_t policy_steps_per_iter = 1;
  double disc_lr = 0.1;
  double policy_lr = 0.1;
  double critic_lr = 0.1;
  std::uint64_t seed = 0;
  PolicyMode policy_mode = PolicyMode::ExactVI;
  RewardModelKind model = RewardModelKind::DBM;
  std::size_t eval_interval = 100;
  std::size_t eval_trajectories = 30;
  std::size_t eval_horizon = 100;
  RegularizerSpec reg = RegularizerSpec::shannon();
  // Regularizers whose mean Bregman divergence is reported; reg when empty.
  std::vector<RegularizerSpec> probes;

  void validate() const;
};

struct MetricsRow {
  std::size_t iter = 0;
  double disc_loss = 0.0;
  std::vector<double> mean_bregman;  // one per probe, +inf when undefined
  double episodic_return = 0.0;
  double policy_tv = 0.0;            // NaN without an expert
};

struct TrainMetrics {
  std::vector<std::string> probe_names;
  std::vector<MetricsRow> rows;
};

struct TrainResult {
  TabularPolicy policy;
  RewardModel model;
  TrainMetrics metrics;
};

// Short column label for a probe: q1 for Shannon, q<value> for Tsallis,
// otherwise the family name.
std::string probe_label(const RegularizerSpec& spec);

using MetricsSink = std::function<void(const MetricsRow&)>;

// Runs the adversarial loop; every metrics row goes to sink as soon as it is
// computed, so rows survive an exception thrown later in training.
TrainResult rairl_train(const TabularMdp& mdp, const DemoSet& demos, const TrainConfig& config,
                        const MetricsSink& sink = {});

// Empirical action frequencies per state with additive smoothing; states
// without demonstrations get uniform rows.
TabularPolicy behavioral_cloning(const DemoSet& demos, std::size_t n_states,
                                 std::size_t n_actions, double smoothing = 0.0);

}  // namespace regmdp
