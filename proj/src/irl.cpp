#include "regmdp/irl.hpp"

#include <algorithm>
#include <sstream>

#include "regmdp/error.hpp"
#include "regmdp/kernels.hpp"
#include "regmdp/probability.hpp"

namespace regmdp {

double reward_baseline(std::span<const double> row, const RegularizerSpec& spec) {
  check_probability_vector(row, "reward_baseline row");
  double acc = 0.0;
  for (double p : row) {
    if (p > 0.0) acc += p * (f_phi_prime(spec, p) - phi(spec, p));
  }
  return acc;
}

std::vector<double> exact_irl_reward_row(std::span<const double> row,
                                         const RegularizerSpec& spec) {
  const double base = reward_baseline(row, spec);
  std::vector<double> t(row.size());
  for (std::size_t a = 0; a < row.size(); ++a) {
    if (row[a] == 0.0 && spec.family == Family::Shannon) {
      throw DomainError("irl reward: action " + std::to_string(a) +
                        " has zero probability, reward is -inf under shannon");
    }
    t[a] = -spec.lambda * (f_phi_prime_extended(spec, row[a]) - base);
  }
  return t;
}

Matrix exact_irl_reward(const TabularPolicy& policy, const RegularizerSpec& spec) {
  Matrix r(policy.n_states(), policy.n_actions());
  for (std::size_t s = 0; s < policy.n_states(); ++s) {
    std::vector<double> t;
    try {
      t = exact_irl_reward_row(policy.row(s), spec);
    } catch (const DomainError& e) {
      throw DomainError("state " + std::to_string(s) + ": " + e.what());
    }
    std::copy(t.begin(), t.end(), r.row(s).begin());
  }
  return r;
}

Matrix shape_reward(const Matrix& reward, std::span<const double> potential,
                    const TabularMdp& mdp, ShapingMode /*mode*/) {
  if (potential.size() != mdp.n_states) throw InvariantError("potential has the wrong length");
  Matrix out = bellman_backup(mdp, reward, potential);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    for (double& v : out.row(s)) v -= potential[s];
  }
  return out;
}

GeistReward geist_reward(const TabularPolicy& policy, const TabularMdp& mdp,
                         const RegularizerSpec& spec) {
  const std::size_t S = policy.n_states();
  const std::size_t A = policy.n_actions();
  Matrix q_e(S, A);
  GeistReward out;
  out.conjugate.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    auto row = policy.row(s);
    for (std::size_t a = 0; a < A; ++a) {
      if (row[a] == 0.0) {
        throw DomainError("geist_reward: state " + std::to_string(s) +
                          " has a zero-probability action");
      }
    }
    const auto g = grad_omega(spec, row);
    std::copy(g.begin(), g.end(), q_e.row(s).begin());
    // pi maximizes <p, Q_E> - Omega(p), so the conjugate is attained at pi.
    out.conjugate[s] = kernels::dot(row, q_e.row(s)) - omega(spec, row);
  }
  out.r_tilde = q_e;
  for (std::size_t s = 0; s < S; ++s) {
    for (double& v : out.r_tilde.row(s)) v -= out.conjugate[s];
  }
  std::vector<double> neg(out.conjugate);
  for (double& v : neg) v = -v;
  out.rho = bellman_backup(mdp, q_e, neg);
  return out;
}

TabularPolicy conditional_policy(const Matrix& d) {
  TabularPolicy pi{Matrix(d.rows(), d.cols())};
  for (std::size_t s = 0; s < d.rows(); ++s) {
    double n = 0.0;
    for (double v : d.row(s)) n += v;
    for (std::size_t a = 0; a < d.cols(); ++a) {
      pi.probs(s, a) = n > 0.0 ? d(s, a) / n : 1.0 / static_cast<double>(d.cols());
    }
  }
  return pi;
}

double visitation_regularizer(const Matrix& d, const RegularizerSpec& spec) {
  double total = 0.0;
  for (std::size_t s = 0; s < d.rows(); ++s) {
    double n = 0.0;
    for (double v : d.row(s)) {
      if (v < 0.0) throw InvariantError("visitation_regularizer: negative entry");
      n += v;
    }
    if (n == 0.0) continue;
    double acc = 0.0;
    for (double v : d.row(s)) {
      if (v > 0.0) acc += v * phi(spec, std::min(1.0, v / n));
    }
    total += -spec.lambda * acc;
  }
  return total;
}

Matrix visitation_gradient_fd(const Matrix& d, const RegularizerSpec& spec, double h) {
  const double smallest = *std::min_element(d.flat().begin(), d.flat().end());
  if (!(h > 0.0) || !(h < smallest)) {
    std::ostringstream os;
    os << "visitation_gradient_fd: step " << h << " must lie in (0, " << smallest << ")";
    throw ParameterError(os.str());
  }
  Matrix grad(d.rows(), d.cols());
  Matrix work = d;
  for (std::size_t s = 0; s < d.rows(); ++s) {
    for (std::size_t a = 0; a < d.cols(); ++a) {
      const double keep = work(s, a);
      work(s, a) = keep + h;
      const double up = visitation_regularizer(work, spec);
      work(s, a) = keep - h;
      const double down = visitation_regularizer(work, spec);
      work(s, a) = keep;
      grad(s, a) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace regmdp
