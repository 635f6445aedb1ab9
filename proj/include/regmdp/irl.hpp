#pragma once

// Closed-form rewards under which a given policy is the unique regularized
// optimum, plus the identities that tie them to shaping and to the
// visitation-space regularizer.

#include <span>
#include <vector>

#include "regmdp/matrix.hpp"
#include "regmdp/mdp.hpp"
#include "regmdp/regularizer.hpp"

namespace regmdp {

// E_{a~p}[f'(p(a)) - phi(p(a))]. Zero entries carry no weight.
double reward_baseline(std::span<const double> row, const RegularizerSpec& spec);

// t(a) = -lambda * (f'(p(a)) - reward_baseline(p)) for one state. Zero
// entries use the f'(0+) limit; DomainError under Shannon.
std::vector<double> exact_irl_reward_row(std::span<const double> row,
                                         const RegularizerSpec& spec);
Matrix exact_irl_reward(const TabularPolicy& policy, const RegularizerSpec& spec);

enum class ShapingMode { NextStateSample, NextStateExpectation };

// r(s,a) + gamma * E_{s'~P(.|s,a)} potential(s') - potential(s). In a tabular
// model the sampled form coincides with the expectation, so both modes
// produce the same table.
Matrix shape_reward(const Matrix& reward, std::span<const double> potential,
                    const TabularMdp& mdp, ShapingMode mode = ShapingMode::NextStateExpectation);

struct GeistReward {
  Matrix rho;                     // Q_E - gamma * E_{s'} Omega*(Q_E(s', .))
  Matrix r_tilde;                 // Q_E - Omega*(Q_E(s, .))
  std::vector<double> conjugate;  // Omega*(Q_E(s, .)) per state
};

// Rewards built from Q_E(s, .) = grad Omega(pi(.|s)). Needs interior rows.
GeistReward geist_reward(const TabularPolicy& policy, const TabularMdp& mdp,
                         const RegularizerSpec& spec);

// Row-normalized d; rows with zero mass become uniform.
TabularPolicy conditional_policy(const Matrix& d);

// sum_s n(s) * Omega(d(s, .) / n(s)) with n(s) = sum_a d(s, a). d need not be
// normalized; zero-mass states contribute 0.
double visitation_regularizer(const Matrix& d, const RegularizerSpec& spec);

// Central differences of visitation_regularizer in each coordinate d(s, a).
// ParameterError if h is not below the smallest entry.
Matrix visitation_gradient_fd(const Matrix& d, const RegularizerSpec& spec, double h = 1e-6);

}  // namespace regmdp
