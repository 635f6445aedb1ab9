#include "regmdp/envs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "regmdp/error.hpp"

namespace regmdp {

namespace {

constexpr std::size_t kBermudaActions = 8;
constexpr std::pair<double, double> kTargets[] = {{-5.0, 10.0}, {0.0, 10.0}, {5.0, 10.0}};

// Nearest integer, ties toward the smaller one.
long round_half_down(double x) { return static_cast<long>(std::ceil(x - 0.5)); }

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParameterError("environment: bad value for " + what + ": '" + text + "'");
  }
}

std::uint64_t parse_uint(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParameterError("environment: bad value for " + what + ": '" + text + "'");
  }
  return v;
}

}  // namespace

Environment bandit_env(BanditKind kind) {
  Environment env;
  TabularMdp& m = env.mdp;
  m.n_states = 1;
  m.n_actions = 4;
  m.p0 = {1.0};
  m.transition = Matrix(4, 1, 1.0);
  m.gamma = 0.99;
  const std::vector<double> row = kind == BanditKind::Dense
                                      ? std::vector<double>{0.1, 0.2, 0.3, 0.4}
                                      : std::vector<double>{0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0};
  env.expert = TabularPolicy{Matrix::from_rows({row})};
  return env;
}

double bermuda_action_angle(std::size_t a) {
  return -std::numbers::pi + static_cast<double>(a) * std::numbers::pi / 4.0;
}

std::size_t bermuda_nearest_action(double theta) {
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < kBermudaActions; ++a) {
    // Angular distance on the circle, so pi and -pi coincide.
    double gap = std::abs(std::remainder(theta - bermuda_action_angle(a), 2.0 * std::numbers::pi));
    if (gap < best_gap - 1e-12) {
      best_gap = gap;
      best = a;
    }
  }
  return best;
}

std::vector<double> bermuda_expert_row(double x, double y) {
  std::vector<double> row(kBermudaActions, 0.0);
  for (const auto& [tx, ty] : kTargets) {
    const double dx = tx - x;
    const double dy = ty - y;
    const double r2 = dx * dx + dy * dy;
    const double weight = 1.0 / (r2 * r2 + kBermudaEpsilon);
    row[bermuda_nearest_action(std::atan2(dy, dx))] += weight;
  }
  const double total = std::accumulate(row.begin(), row.end(), 0.0);
  for (double& v : row) v /= total;
  return row;
}

Environment bermuda_grid(std::size_t nx, std::size_t ny, double gamma) {
  if (nx < 2 || ny < 2) throw ParameterError("bermuda grid needs at least 2x2 cells");
  Environment env;
  TabularMdp& m = env.mdp;
  m.n_states = nx * ny;
  m.n_actions = kBermudaActions;
  m.gamma = gamma;
  m.p0.assign(m.n_states, 0.0);
  for (std::size_t i = 0; i < nx; ++i) m.p0[i] = 1.0 / static_cast<double>(nx);
  m.transition = Matrix(m.n_states * m.n_actions, m.n_states);
  env.coords.resize(m.n_states);
  Matrix expert(m.n_states, m.n_actions);

  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t s = j * nx + i;
      const double x = -5.0 + 10.0 * static_cast<double>(i) / static_cast<double>(nx - 1);
      const double y = 10.0 * static_cast<double>(j) / static_cast<double>(ny - 1);
      env.coords[s] = {x, y};
      const auto row = bermuda_expert_row(x, y);
      std::copy(row.begin(), row.end(), expert.row(s).begin());
      for (std::size_t a = 0; a < m.n_actions; ++a) {
        std::size_t next = s;
        if (j + 1 < ny) {
          const double th = bermuda_action_angle(a);
          const long ni = std::clamp<long>(round_half_down(i + std::cos(th)), 0, nx - 1);
          const long nj = std::clamp<long>(round_half_down(j + std::sin(th)), 0, ny - 1);
          next = static_cast<std::size_t>(nj) * nx + static_cast<std::size_t>(ni);
        }
        m.transition(m.pair_index(s, a), next) = 1.0;
      }
    }
  }
  env.expert = TabularPolicy{std::move(expert)};
  return env;
}

TabularMdp random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions,
                      double gamma, double transition_sparsity) {
  if (n_states == 0 || n_actions == 0) throw ParameterError("random_mdp needs S, A >= 1");
  if (!(transition_sparsity > 0.0 && transition_sparsity <= 1.0)) {
    throw ParameterError("random_mdp sparsity must lie in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.transition = Matrix(n_states * n_actions, n_states);
  const auto support = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(transition_sparsity * static_cast<double>(n_states))));
  std::vector<std::size_t> order(n_states);
  for (std::size_t row = 0; row < n_states * n_actions; ++row) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto out = m.transition.row(row);
    double total = 0.0;
    for (std::size_t k = 0; k < support; ++k) {
      // Exponential draws give a flat Dirichlet after normalization.
      const double w = -std::log(1.0 - unit(rng));
      out[order[k]] = w;
      total += w;
    }
    for (double& v : out) v = 0.99 * v / total + 0.01 / static_cast<double>(n_states);
  }
  m.p0.resize(n_states);
  double total = 0.0;
  for (double& v : m.p0) {
    v = 0.1 + unit(rng);
    total += v;
  }
  for (double& v : m.p0) v /= total;
  Matrix reward(n_states, n_actions);
  for (double& v : reward.flat()) v = 2.0 * unit(rng) - 1.0;
  m.reward = std::move(reward);
  return m;
}

TabularPolicy random_interior_policy(std::mt19937_64& rng, std::size_t n_states,
                                     std::size_t n_actions) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  TabularPolicy pi{Matrix(n_states, n_actions)};
  for (std::size_t s = 0; s < n_states; ++s) {
    auto row = pi.probs.row(s);
    double total = 0.0;
    for (double& v : row) {
      v = unit(rng);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return pi;
}

std::size_t sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;  // rounding left u just above the cumulative sum
}

VisitationSampler::VisitationSampler(const TabularMdp& mdp, std::uint64_t seed)
    : mdp_(&mdp), rng_(seed) {
  state_ = sample_index(mdp.p0, unit_(rng_));
}

Transition VisitationSampler::step(const TabularPolicy& policy) {
  Transition tr;
  tr.s = state_;
  tr.a = sample_index(policy.row(state_), unit_(rng_));
  tr.next = sample_index(mdp_->next_state_probs(tr.s, tr.a), unit_(rng_));
  state_ = unit_(rng_) < 1.0 - mdp_->gamma ? sample_index(mdp_->p0, unit_(rng_)) : tr.next;
  return tr;
}

DemoSet sample_demos(const TabularMdp& mdp, const TabularPolicy& policy, std::size_t n_pairs,
                     std::uint64_t seed) {
  VisitationSampler sampler(mdp, seed);
  DemoSet demos;
  demos.pairs.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const Transition tr = sampler.step(policy);
    demos.pairs.push_back({tr.s, tr.a});
  }
  demos.expert_policy = policy;
  return demos;
}

std::vector<std::size_t> sample_trajectory_states(const TabularMdp& mdp,
                                                  const TabularPolicy& policy,
                                                  std::size_t n_traj, std::size_t horizon,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> states;
  for (std::size_t t = 0; t < n_traj; ++t) {
    std::size_t s = sample_index(mdp.p0, unit(rng));
    for (std::size_t step = 0; step < horizon; ++step) {
      states.push_back(s);
      const std::size_t a = sample_index(policy.row(s), unit(rng));
      auto next = mdp.next_state_probs(s, a);
      bool absorbing = true;
      for (std::size_t b = 0; b < mdp.n_actions && absorbing; ++b) {
        absorbing = mdp.next_state_probs(s, b)[s] == 1.0;
      }
      if (absorbing) break;
      s = sample_index(next, unit(rng));
    }
  }
  return states;
}

Environment make_environment(const std::string& name) {
  const auto colon = name.find(':');
  const std::string kind = name.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : name.substr(colon + 1);
  if (kind == "bandit") {
    if (args == "dense") return bandit_env(BanditKind::Dense);
    if (args == "sparse") return bandit_env(BanditKind::Sparse);
    throw ParameterError("environment: bandit variant must be dense or sparse, got '" + args + "'");
  }
  if (kind == "bermuda") {
    const auto x = args.find('x');
    if (x == std::string::npos) throw ParameterError("environment: expected bermuda:NXxNY");
    return bermuda_grid(parse_uint(args.substr(0, x), "nx"), parse_uint(args.substr(x + 1), "ny"));
  }
  if (kind == "random") {
    std::map<std::string, std::string> kv;
    std::size_t pos = 0;
    while (pos < args.size()) {
      const auto comma = std::min(args.find(',', pos), args.size());
      const std::string item = args.substr(pos, comma - pos);
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ParameterError("environment: expected key=value, got '" + item + "'");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
      pos = comma + 1;
    }
    for (const auto& [key, _] : kv) {
      if (key != "seed" && key != "s" && key != "a" && key != "gamma" && key != "sparsity") {
        throw ParameterError("environment: unknown random-MDP key '" + key + "'");
      }
    }
    auto get = [&](const std::string& key, const std::string& fallback) {
      auto it = kv.find(key);
      return it == kv.end() ? fallback : it->second;
    };
    Environment env;
    env.mdp = random_mdp(parse_uint(get("seed", "0"), "seed"), parse_uint(get("s", "10"), "s"),
                         parse_uint(get("a", "4"), "a"), parse_double(get("gamma", "0.95"), "gamma"),
                         parse_double(get("sparsity", "1.0"), "sparsity"));
    // Expert drawn from the same seed so the name fully determines the task.
    std::mt19937_64 rng(parse_uint(get("seed", "0"), "seed") ^ 0x9e3779b97f4a7c15ULL);
    env.expert = random_interior_policy(rng, env.mdp.n_states, env.mdp.n_actions);
    return env;
  }
  if (kind == "file") throw ParameterError("environment: file: environments are loaded by the CLI");
  throw ParameterError("environment: unknown kind '" + kind + "'");
}

}  // namespace regmdp
