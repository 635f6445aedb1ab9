#include "regmdp/mdp.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "regmdp/error.hpp"
#include "regmdp/kernels.hpp"
#include "regmdp/probability.hpp"

namespace regmdp {

namespace {

constexpr double kMuTol = 1e-12;
constexpr int kMuMaxIter = 200;
constexpr double kMassTol = 1e-10;

std::string location(std::size_t s, std::size_t a) {
  std::ostringstream os;
  os << "transition row (s=" << s << ", a=" << a << ")";
  return os.str();
}

void check_policy_shape(const TabularMdp& mdp, const TabularPolicy& policy) {
  if (policy.n_states() != mdp.n_states || policy.n_actions() != mdp.n_actions) {
    throw InvariantError("policy shape does not match the MDP");
  }
}

// Sum of g((mu - q_a) / lambda) and its derivative in mu.
struct Mass {
  double value = 0.0;
  double slope = 0.0;
};

Mass mass_at(std::span<const double> q, const RegularizerSpec& spec, double mu) {
  Mass m;
  for (double qa : q) {
    const double p = g_phi(spec, (mu - qa) / spec.lambda);
    m.value += p;
    if (p > 0.0 && p < 1.0) m.slope += 1.0 / (spec.lambda * f_phi_second(spec, p));
  }
  return m;
}

// Final backup, policy extraction and the conjugacy cross-check shared by the
// two solvers.
void finish_solution(const TabularMdp& mdp, const Matrix& reward, const RegularizerSpec& spec,
                     const ValueIterationOptions& options, std::span<const double> v,
                     ValueSolution& sol) {
  sol.q_values = bellman_backup(mdp, reward, v);
  sol.v_values.resize(mdp.n_states);
  sol.mu.resize(mdp.n_states);
  sol.policy.probs = Matrix(mdp.n_states, mdp.n_actions);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    auto qrow = sol.q_values.row(s);
    StatePolicy sp = optimal_state_policy(qrow, spec);
    const double via_normalizer = optimal_state_value(sp, spec);
    const double direct = kernels::dot(sp.p, qrow) - omega(spec, sp.p);
    if (std::abs(via_normalizer - direct) > options.conjugacy_tol) {
      std::ostringstream os;
      os.precision(17);
      os << "value iteration: conjugacy check failed at state " << s << " (" << via_normalizer
         << " vs " << direct << ")";
      throw NumericError(os.str());
    }
    sol.v_values[s] = via_normalizer;
    sol.mu[s] = sp.mu;
    std::copy(sp.p.begin(), sp.p.end(), sol.policy.probs.row(s).begin());
  }
}

}  // namespace

void TabularMdp::validate() const {
  if (n_states == 0 || n_actions == 0) throw InvariantError("MDP needs at least one state and action");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvariantError("gamma must lie in [0, 1)");
  if (p0.size() != n_states) throw InvariantError("p0 has the wrong length");
  check_probability_vector(p0, "p0");
  if (transition.rows() != n_states * n_actions || transition.cols() != n_states) {
    throw InvariantError("transition table has the wrong shape");
  }
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      check_probability_vector(next_state_probs(s, a), location(s, a));
    }
  }
  if (reward) {
    if (reward->rows() != n_states || reward->cols() != n_actions) {
      throw InvariantError("reward table has the wrong shape");
    }
    for (double r : reward->flat()) {
      if (!std::isfinite(r)) throw InvariantError("reward table has a non-finite entry");
    }
  }
}

const Matrix& TabularMdp::require_reward() const {
  if (!reward) throw InvariantError("MDP has no reward table");
  return *reward;
}

TabularPolicy TabularPolicy::uniform(std::size_t n_states, std::size_t n_actions) {
  return {Matrix(n_states, n_actions, 1.0 / static_cast<double>(n_actions))};
}

void TabularPolicy::validate() const {
  if (probs.rows() == 0 || probs.cols() == 0) throw InvariantError("empty policy");
  for (std::size_t s = 0; s < probs.rows(); ++s) {
    check_probability_vector(probs.row(s), "policy row " + std::to_string(s));
  }
}

double VisitationDistribution::state_mass(std::size_t s) const {
  double acc = 0.0;
  for (double v : d.row(s)) acc += v;
  return acc;
}

Matrix bellman_backup(const TabularMdp& mdp, const Matrix& reward, std::span<const double> v) {
  Matrix q(mdp.n_states, mdp.n_actions);
  kernels::active().bellman_backup(reward.data(), mdp.transition.data(),
                                   mdp.n_states * mdp.n_actions, mdp.n_states, v.data(),
                                   mdp.gamma, q.data());
  return q;
}

std::vector<double> state_visitation(const TabularMdp& mdp, const TabularPolicy& policy) {
  check_policy_shape(mdp, policy);
  const auto n = static_cast<Eigen::Index>(mdp.n_states);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      const double pa = policy.probs(s, a);
      if (pa == 0.0) continue;
      auto next = mdp.next_state_probs(s, a);
      for (std::size_t sn = 0; sn < mdp.n_states; ++sn) {
        // Transposed: row sn collects inflow from s.
        system(static_cast<Eigen::Index>(sn), static_cast<Eigen::Index>(s)) -=
            mdp.gamma * pa * next[sn];
      }
    }
  }
  Eigen::VectorXd rhs(n);
  for (std::size_t s = 0; s < mdp.n_states; ++s) rhs(static_cast<Eigen::Index>(s)) = (1.0 - mdp.gamma) * mdp.p0[s];
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericError("visitation: singular linear system");
  std::vector<double> out(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    out[s] = std::max(0.0, x(static_cast<Eigen::Index>(s)));
  }
  return out;
}

VisitationDistribution visitation(const TabularMdp& mdp, const TabularPolicy& policy) {
  const auto x = state_visitation(mdp, policy);
  VisitationDistribution vd{Matrix(mdp.n_states, mdp.n_actions)};
  double total = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      vd.d(s, a) = policy.probs(s, a) * x[s];
      total += vd.d(s, a);
    }
  }
  if (!(total > 0.0)) throw NumericError("visitation: zero total mass");
  for (double& v : vd.d.flat()) v /= total;
  return vd;
}

PolicyValues regularized_policy_evaluation(const TabularMdp& mdp, const TabularPolicy& policy,
                                           const RegularizerSpec& spec, double tol) {
  check_policy_shape(mdp, policy);
  const Matrix& reward = mdp.require_reward();
  std::vector<double> reg(mdp.n_states);
  for (std::size_t s = 0; s < mdp.n_states; ++s) reg[s] = omega(spec, policy.row(s));

  std::vector<double> v(mdp.n_states, 0.0);
  Matrix q;
  // Contraction: the error shrinks by gamma per sweep.
  const std::size_t max_iter = 10'000'000;
  for (std::size_t it = 0; it < max_iter; ++it) {
    q = bellman_backup(mdp, reward, v);
    double delta = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      const double next = kernels::dot(policy.row(s), q.row(s)) - reg[s];
      delta = std::max(delta, std::abs(next - v[s]));
      v[s] = next;
    }
    if (delta <= tol) {
      q = bellman_backup(mdp, reward, v);
      return {std::move(v), std::move(q)};
    }
  }
  throw ConvergenceError("regularized_policy_evaluation did not converge");
}

StatePolicy optimal_state_policy(std::span<const double> q_row, const RegularizerSpec& spec) {
  const std::size_t n = q_row.size();
  if (n == 0) throw InvariantError("optimal_state_policy: empty action set");
  for (double qa : q_row) {
    if (!std::isfinite(qa)) throw DomainError("optimal_state_policy: non-finite Q value");
  }
  StatePolicy out;
  if (n == 1) {
    out.p = {1.0};
    out.mu = q_row[0] + spec.lambda * f_phi_prime(spec, 1.0);
    return out;
  }
  if (spec.family == Family::Shannon) {
    std::vector<double> scaled(q_row.begin(), q_row.end());
    for (double& v : scaled) v /= spec.lambda;
    out.p = softmax(scaled);
    out.mu = spec.lambda * (log_sum_exp(scaled) - 1.0);
    return out;
  }

  const double q_max = *std::max_element(q_row.begin(), q_row.end());
  double lo = q_max + spec.lambda * f_phi_prime(spec, 1.0);
  double hi = q_max + spec.lambda * f_phi_prime(spec, 1.0 / static_cast<double>(n));
  const Mass at_lo = mass_at(q_row, spec, lo);
  const Mass at_hi = mass_at(q_row, spec, hi);
  if (at_lo.value < 1.0 - kMassTol || at_hi.value > 1.0 + kMassTol) {
    throw NumericError("optimal_state_policy: normalizer bracket does not enclose a root for " +
                       spec.describe());
  }

  // Total mass is decreasing in mu; safeguarded Newton inside [lo, hi].
  double mu = 0.5 * (lo + hi);
  bool converged = false;
  for (int it = 0; it < kMuMaxIter; ++it) {
    const Mass m = mass_at(q_row, spec, mu);
    const double h = m.value - 1.0;
    if (h == 0.0) {
      converged = true;
      break;
    }
    if (h > 0.0) {
      lo = mu;
    } else {
      hi = mu;
    }
    double next = (m.slope < 0.0) ? mu - h / m.slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool stalled = next <= lo || next >= hi;
    const double step = std::abs(next - mu);
    mu = next;
    if (step <= kMuTol || hi - lo <= kMuTol || stalled) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("optimal_state_policy: normalizer did not converge");

  out.p.resize(n);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    out.p[a] = g_phi(spec, (mu - q_row[a]) / spec.lambda);
    total += out.p[a];
  }
  if (std::abs(total - 1.0) > kMassTol) {
    std::ostringstream os;
    os.precision(17);
    os << "optimal_state_policy: mass " << total << " after normalizer solve";
    throw NumericError(os.str());
  }
  for (double& v : out.p) v /= total;
  out.mu = mu;
  return out;
}

double optimal_state_value(const StatePolicy& sp, const RegularizerSpec& spec) {
  double acc = 0.0;
  for (double p : sp.p) {
    if (p > 0.0) acc += p * p * phi_prime(spec, p);
  }
  return sp.mu - spec.lambda * acc;
}

ValueSolution regularized_value_iteration(const TabularMdp& mdp, const RegularizerSpec& spec,
                                          const ValueIterationOptions& options) {
  return regularized_value_iteration(mdp, mdp.require_reward(), spec, options);
}

ValueSolution regularized_value_iteration(const TabularMdp& mdp, const Matrix& reward,
                                          const RegularizerSpec& spec,
                                          const ValueIterationOptions& options) {
  if (reward.rows() != mdp.n_states || reward.cols() != mdp.n_actions) {
    throw InvariantError("reward table shape does not match the MDP");
  }
  std::vector<double> v = options.initial_v;
  if (v.empty()) v.assign(mdp.n_states, 0.0);
  if (v.size() != mdp.n_states) throw InvariantError("initial value has the wrong length");

  ValueSolution sol;
  std::size_t it = 0;
  for (;; ++it) {
    if (it >= options.max_iterations) {
      throw ConvergenceError("regularized_value_iteration: iteration limit reached");
    }
    const Matrix q = bellman_backup(mdp, reward, v);
    double delta = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      const double next = optimal_state_value(optimal_state_policy(q.row(s), spec), spec);
      delta = std::max(delta, std::abs(next - v[s]));
      v[s] = next;
    }
    if (delta <= options.tol) break;
  }

  sol.iterations = it + 1;
  finish_solution(mdp, reward, spec, options, v, sol);
  return sol;
}

ValueSolution regularized_policy_iteration(const TabularMdp& mdp, const Matrix& reward,
                                           const RegularizerSpec& spec,
                                           const ValueIterationOptions& options) {
  if (reward.rows() != mdp.n_states || reward.cols() != mdp.n_actions) {
    throw InvariantError("reward table shape does not match the MDP");
  }
  std::vector<double> v = options.initial_v;
  if (v.empty()) v.assign(mdp.n_states, 0.0);
  if (v.size() != mdp.n_states) throw InvariantError("initial value has the wrong length");
  TabularPolicy policy{Matrix(mdp.n_states, mdp.n_actions)};
  ValueSolution sol;
  std::size_t it = 0;
  for (;; ++it) {
    if (it >= options.max_iterations) {
      throw ConvergenceError("regularized_policy_iteration: iteration limit reached");
    }
    const Matrix q = bellman_backup(mdp, reward, v);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      const auto sp = optimal_state_policy(q.row(s), spec);
      std::copy(sp.p.begin(), sp.p.end(), policy.probs.row(s).begin());
    }
    const auto next = exact_policy_values(mdp, reward, policy, spec);
    double delta = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) delta = std::max(delta, std::abs(next[s] - v[s]));
    v = next;
    if (delta <= options.tol) break;
  }
  sol.iterations = it + 1;
  finish_solution(mdp, reward, spec, options, v, sol);
  return sol;
}

std::vector<double> exact_policy_values(const TabularMdp& mdp, const Matrix& reward,
                                        const TabularPolicy& policy, const RegularizerSpec& spec) {
  check_policy_shape(mdp, policy);
  // Sparse factorization: grid dynamics have a handful of successors per row,
  // and dense random MDPs are small enough that the overhead does not matter.
  const auto n = static_cast<Eigen::Index>(mdp.n_states);
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<double> row_p(mdp.n_states);
  Eigen::VectorXd rhs(n);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const auto row = policy.row(s);
    rhs(static_cast<Eigen::Index>(s)) = kernels::dot(row, reward.row(s)) - omega(spec, row);
    std::fill(row_p.begin(), row_p.end(), 0.0);
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      if (row[a] == 0.0) continue;
      auto next = mdp.next_state_probs(s, a);
      for (std::size_t sn = 0; sn < mdp.n_states; ++sn) {
        if (next[sn] != 0.0) row_p[sn] += row[a] * next[sn];
      }
    }
    for (std::size_t sn = 0; sn < mdp.n_states; ++sn) {
      const double diag = sn == s ? 1.0 : 0.0;
      if (row_p[sn] != 0.0 || sn == s) {
        entries.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(sn),
                             diag - mdp.gamma * row_p[sn]);
      }
    }
  }
  Eigen::SparseMatrix<double> system(n, n);
  system.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) throw NumericError("policy evaluation: singular linear system");
  Eigen::VectorXd x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericError("policy evaluation: singular linear system");
  return {x.data(), x.data() + x.size()};
}

double return_value(const TabularMdp& mdp, const TabularPolicy& policy,
                    const RegularizerSpec& spec) {
  return return_value(mdp, mdp.require_reward(), policy, spec);
}

double return_value(const TabularMdp& mdp, const Matrix& reward, const TabularPolicy& policy,
                    const RegularizerSpec& spec) {
  const VisitationDistribution vd = visitation(mdp, policy);
  double acc = 0.0;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const double mass = vd.state_mass(s);
    if (mass == 0.0) continue;
    acc += kernels::dot(vd.d.row(s), reward.row(s)) - mass * omega(spec, policy.row(s));
  }
  return acc / (1.0 - mdp.gamma);
}

double max_state_tv(const TabularPolicy& a, const TabularPolicy& b) {
  double worst = 0.0;
  for (std::size_t s = 0; s < a.n_states(); ++s) {
    worst = std::max(worst, total_variation(a.row(s), b.row(s)));
  }
  return worst;
}

}  // namespace regmdp
