#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "regmdp/mdp.hpp"

namespace regmdp {

struct Environment {
  TabularMdp mdp;
  std::optional<TabularPolicy> expert;
  // Grid layout for bermuda, empty otherwise: state s sits at coords[s].
  std::vector<std::pair<double, double>> coords;
};

enum class BanditKind { Dense, Sparse };

// One state, four self-looping arms, gamma = 0.99. Expert (.1, .2, .3, .4) or
// (0, 0, 1/3, 2/3).
Environment bandit_env(BanditKind kind);

inline constexpr double kBermudaEpsilon = 1e-4;

// nx by ny grid over [-5, 5] x [0, 10]; node (i, j) is state j * nx + i.
// Eight compass moves of one cell, clamped at the border; the top row absorbs.
// Starts are uniform over the bottom row. gamma defaults to 0.9.
Environment bermuda_grid(std::size_t nx, std::size_t ny, double gamma = 0.9);

// Expert action distribution at a point (x, y) for the three-target world.
std::vector<double> bermuda_expert_row(double x, double y);

// Index of the action angle closest to theta (angles -pi + k pi/4).
std::size_t bermuda_nearest_action(double theta);
double bermuda_action_angle(std::size_t a);

// Seeded random MDP: each transition row puts Dirichlet-like random mass on
// round(sparsity * S) next states and then mixes in 1% uniform. Also draws a
// reward in [-1, 1] and a strictly positive p0.
TabularMdp random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                      double gamma, double transition_sparsity = 1.0);

// Strictly interior random policy (entries bounded away from 0).
TabularPolicy random_interior_policy(std::mt19937_64& rng, std::size_t n_states,
                                     std::size_t n_actions);

struct StateAction {
  std::size_t s = 0;
  std::size_t a = 0;
  friend bool operator==(const StateAction&, const StateAction&) = default;
};

// One environment step: the pair taken and the next state drawn from the
// dynamics (before any restart).
struct Transition {
  std::size_t s = 0;
  std::size_t a = 0;
  std::size_t next = 0;
};

struct DemoSet {
  std::vector<StateAction> pairs;
  std::optional<TabularPolicy> expert_policy;
};

// Draws from a categorical distribution given u in [0, 1).
std::size_t sample_index(std::span<const double> probs, double u);

// Markov chain that follows the policy and with probability 1 - gamma restarts
// from p0 after each step. Its stationary law is the normalized discounted
// visitation, so the emitted pairs are (correlated) draws from d_pi.
class VisitationSampler {
 public:
  VisitationSampler(const TabularMdp& mdp, std::uint64_t seed);
  Transition step(const TabularPolicy& policy);
  std::size_t state() const { return state_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  const TabularMdp* mdp_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::size_t state_ = 0;
};

DemoSet sample_demos(const TabularMdp& mdp, const TabularPolicy& policy, std::size_t n_pairs,
                     std::uint64_t seed);

// States along n_traj trajectories from p0, each followed until it enters an
// absorbing state or reaches horizon steps.
std::vector<std::size_t> sample_trajectory_states(const TabularMdp& mdp,
                                                  const TabularPolicy& policy,
                                                  std::size_t n_traj, std::size_t horizon,
                                                  std::uint64_t seed);

// Parses "bandit:dense", "bandit:sparse", "bermuda:21x21",
// "random:seed=7,s=10,a=4[,gamma=0.95,sparsity=0.5]". ParameterError otherwise.
Environment make_environment(const std::string& name);

}  // namespace regmdp
