#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "regmdp/matrix.hpp"
#include "regmdp/regularizer.hpp"

namespace regmdp {

// Finite discounted MDP. transition has one row per (s, a) pair, at index
// s * n_actions + a, holding the next-state distribution.
struct TabularMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> p0;
  Matrix transition;
  double gamma = 0.0;
  std::optional<Matrix> reward;  // n_states x n_actions

  std::size_t pair_index(std::size_t s, std::size_t a) const { return s * n_actions + a; }
  std::span<const double> next_state_probs(std::size_t s, std::size_t a) const {
    return transition.row(pair_index(s, a));
  }

  // Throws InvariantError naming the offending row or entry.
  void validate() const;
  const Matrix& require_reward() const;
};

// Row-stochastic state -> action table.
struct TabularPolicy {
  Matrix probs;  // n_states x n_actions

  static TabularPolicy uniform(std::size_t n_states, std::size_t n_actions);
  std::size_t n_states() const { return probs.rows(); }
  std::size_t n_actions() const { return probs.cols(); }
  std::span<const double> row(std::size_t s) const { return probs.row(s); }
  void validate() const;
};

// Normalized discounted state-action occupancy.
struct VisitationDistribution {
  Matrix d;  // n_states x n_actions
  double state_mass(std::size_t s) const;
};

struct StatePolicy {
  std::vector<double> p;
  double mu = 0.0;
};

struct ValueSolution {
  Matrix q_values;
  std::vector<double> v_values;
  TabularPolicy policy;
  std::vector<double> mu;
  std::size_t iterations = 0;
};

struct PolicyValues {
  std::vector<double> v;
  Matrix q;
};

struct ValueIterationOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 2'000'000;
  // Starting point; zeros when empty.
  std::vector<double> initial_v;
  // Bound on |conjugate value - (<pi, Q> - Omega(pi))| checked at convergence.
  double conjugacy_tol = 1e-8;
};

// Q = r + gamma * P V for every (s, a).
Matrix bellman_backup(const TabularMdp& mdp, const Matrix& reward, std::span<const double> v);

// Discounted state occupancy x solving x = (1 - gamma) P0 + gamma P_pi^T x.
std::vector<double> state_visitation(const TabularMdp& mdp, const TabularPolicy& policy);
VisitationDistribution visitation(const TabularMdp& mdp, const TabularPolicy& policy);

// Fixed point of the regularized evaluation operator
// [T^pi V](s) = <pi(.|s), Q(s, .)> - Omega(pi(.|s)).
PolicyValues regularized_policy_evaluation(const TabularMdp& mdp, const TabularPolicy& policy,
                                           const RegularizerSpec& spec, double tol = 1e-10);

// Maximizer of <p, q> - Omega(p) over the simplex together with its
// normalizer mu: p(a) = max{g((mu - q(a)) / lambda), 0}, sum_a p(a) = 1.
StatePolicy optimal_state_policy(std::span<const double> q_row, const RegularizerSpec& spec);

// mu - lambda * sum_a p(a)^2 phi'(p(a)): the optimal state value given the
// solution of optimal_state_policy.
double optimal_state_value(const StatePolicy& sp, const RegularizerSpec& spec);

ValueSolution regularized_value_iteration(const TabularMdp& mdp, const RegularizerSpec& spec,
                                          const ValueIterationOptions& options = {});

// Same, with an explicit reward table overriding mdp.reward.
ValueSolution regularized_value_iteration(const TabularMdp& mdp, const Matrix& reward,
                                          const RegularizerSpec& spec,
                                          const ValueIterationOptions& options = {});

// Policy iteration with exact (direct-solve) evaluation. Converges in a handful
// of sweeps regardless of gamma, at O(S^3) per sweep; preferable to value
// iteration for small state spaces with gamma close to 1.
ValueSolution regularized_policy_iteration(const TabularMdp& mdp, const Matrix& reward,
                                           const RegularizerSpec& spec,
                                           const ValueIterationOptions& options = {});

// V^pi solved directly from (I - gamma P_pi) V = r_pi - Omega(pi).
std::vector<double> exact_policy_values(const TabularMdp& mdp, const Matrix& reward,
                                        const TabularPolicy& policy, const RegularizerSpec& spec);

// J(r, pi) = 1/(1-gamma) * E_{(s,a)~d_pi}[r(s,a) - Omega(pi(.|s))].
double return_value(const TabularMdp& mdp, const TabularPolicy& policy,
                    const RegularizerSpec& spec);
double return_value(const TabularMdp& mdp, const Matrix& reward, const TabularPolicy& policy,
                    const RegularizerSpec& spec);

// Largest per-state total variation between two policies.
double max_state_tv(const TabularPolicy& a, const TabularPolicy& b);

}  // namespace regmdp
