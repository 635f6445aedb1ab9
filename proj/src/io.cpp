#include "regmdp/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "regmdp/error.hpp"

namespace regmdp::io {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParameterError(where + ": expected a JSON object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require_object(j, where);
  std::set<std::string> ok;
  for (const char* k : allowed) ok.insert(k);
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ParameterError(where + ": unknown key '" + key + "'");
  }
}

double get_number(const json& j, const std::string& key, const std::string& where, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ParameterError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

std::uint64_t get_count(const json& j, const std::string& key, const std::string& where,
                        std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<long long>() >= 0)) {
    throw ParameterError(where + "." + key + ": expected a nonnegative integer");
  }
  return j[key].get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& key, const std::string& where,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ParameterError(where + "." + key + ": expected a string");
  return j[key].get<std::string>();
}

std::vector<double> vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParameterError(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParameterError(where + "[" + std::to_string(i) + "]: expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

namespace {

// Non-finite values are not valid JSON; write them as strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

json to_json(const RegularizerSpec& spec) {
  json j{{"family", std::string(family_name(spec.family))}, {"lambda", spec.lambda}};
  switch (spec.family) {
    case Family::Shannon: break;
    case Family::Tsallis:
      j["k"] = spec.k;
      j["q"] = spec.q;
      break;
    case Family::Exp:
      j["exp_k"] = spec.exp_k;
      j["exp_q"] = spec.exp_q;
      break;
    case Family::Cos:
    case Family::Sin: j["theta"] = spec.theta; break;
  }
  return j;
}

RegularizerSpec regularizer_from_json(const json& j, const std::string& where) {
  reject_unknown(j, where, {"family", "lambda", "k", "q", "theta", "exp_k", "exp_q"});
  if (!j.contains("family")) throw ParameterError(where + ": missing 'family'");
  RegularizerSpec spec;
  spec.family = parse_family(get_string(j, "family", where, ""));
  spec.lambda = get_number(j, "lambda", where, 1.0);
  spec.k = get_number(j, "k", where, 1.0);
  spec.q = get_number(j, "q", where, 2.0);
  spec.theta = get_number(j, "theta", where,
                          spec.family == Family::Sin ? kSinDefaultTheta : kCosDefaultTheta);
  spec.exp_k = get_number(j, "exp_k", where, 0.0);
  spec.exp_q = get_number(j, "exp_q", where, std::numbers::e);
  try {
    spec.validate();
  } catch (const ParameterError& e) {
    throw ParameterError(where + ": " + e.what());
  }
  return spec;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (double v : m.row(r)) row.push_back(number(v));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParameterError(where + ": expected an array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < j.size(); ++r) {
    rows.push_back(vector_from_json(j[r], where + "[" + std::to_string(r) + "]"));
    if (rows.back().size() != rows.front().size()) throw ParameterError(where + ": ragged rows");
  }
  return Matrix::from_rows(rows);
}

json to_json(const TabularMdp& mdp) {
  json trans = json::array();
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    json per_action = json::array();
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      auto row = mdp.next_state_probs(s, a);
      per_action.push_back(std::vector<double>(row.begin(), row.end()));
    }
    trans.push_back(std::move(per_action));
  }
  json j{{"n_states", mdp.n_states}, {"n_actions", mdp.n_actions}, {"p0", mdp.p0},
         {"transition", trans},      {"gamma", mdp.gamma}};
  if (mdp.reward) j["reward"] = to_json(*mdp.reward);
  return j;
}

TabularMdp mdp_from_json(const json& j, const std::string& where) {
  reject_unknown(j, where, {"n_states", "n_actions", "p0", "transition", "gamma", "reward"});
  for (const char* key : {"n_states", "n_actions", "p0", "transition", "gamma"}) {
    if (!j.contains(key)) throw ParameterError(where + ": missing '" + key + "'");
  }
  TabularMdp m;
  m.n_states = get_count(j, "n_states", where, 0);
  m.n_actions = get_count(j, "n_actions", where, 0);
  m.gamma = get_number(j, "gamma", where, 0.0);
  m.p0 = vector_from_json(j["p0"], where + ".p0");
  const json& t = j["transition"];
  if (!t.is_array() || t.size() != m.n_states) {
    throw ParameterError(where + ".transition: expected n_states entries");
  }
  m.transition = Matrix(m.n_states * m.n_actions, m.n_states);
  for (std::size_t s = 0; s < m.n_states; ++s) {
    if (!t[s].is_array() || t[s].size() != m.n_actions) {
      throw ParameterError(where + ".transition[" + std::to_string(s) + "]: expected n_actions rows");
    }
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      const auto row = vector_from_json(
          t[s][a], where + ".transition[" + std::to_string(s) + "][" + std::to_string(a) + "]");
      if (row.size() != m.n_states) {
        throw ParameterError(where + ".transition[" + std::to_string(s) + "][" + std::to_string(a) +
                             "]: expected n_states entries");
      }
      std::copy(row.begin(), row.end(), m.transition.row(m.pair_index(s, a)).begin());
    }
  }
  if (j.contains("reward")) m.reward = matrix_from_json(j["reward"], where + ".reward");
  try {
    m.validate();
  } catch (const InvariantError& e) {
    throw ParameterError(where + ": " + e.what());
  }
  return m;
}

json to_json(const TabularPolicy& pi) { return to_json(pi.probs); }

json to_json(const ValueSolution& sol) {
  json v = json::array();
  for (double x : sol.v_values) v.push_back(number(x));
  json mu = json::array();
  for (double x : sol.mu) mu.push_back(number(x));
  return {{"q_values", to_json(sol.q_values)}, {"v_values", v},          {"mu", mu},
          {"policy", to_json(sol.policy)},     {"iterations", sol.iterations}};
}

json to_json(const RewardModel& model) {
  json j{{"kind", std::string(reward_model_name(model.kind))}};
  if (model.kind == RewardModelKind::NSM) {
    j["nsm_table"] = to_json(model.nsm_table);
  } else {
    j["dbm_logits"] = to_json(model.dbm_logits);
    j["dbm_baseline"] = model.dbm_baseline;
  }
  return j;
}

json to_json(const TrainConfig& cfg) {
  json probes = json::array();
  for (const auto& p : cfg.probes) probes.push_back(to_json(p));
  return {{"iterations", cfg.iterations},
          {"batch_size", cfg.batch_size},
          {"rollout_steps_per_iter", cfg.rollout_steps_per_iter},
          {"rollout_buffer", cfg.rollout_buffer},
          {"disc_steps_per_iter", cfg.disc_steps_per_iter},
          {"policy_steps_per_iter", cfg.policy_steps_per_iter},
          {"disc_lr", cfg.disc_lr},
          {"policy_lr", cfg.policy_lr},
          {"critic_lr", cfg.critic_lr},
          {"seed", cfg.seed},
          {"policy_mode", std::string(policy_mode_name(cfg.policy_mode))},
          {"model", std::string(reward_model_name(cfg.model))},
          {"eval_interval", cfg.eval_interval},
          {"eval_trajectories", cfg.eval_trajectories},
          {"eval_horizon", cfg.eval_horizon},
          {"reg", to_json(cfg.reg)},
          {"probes", probes}};
}

TrainConfig train_config_from_json(const json& j, const std::string& where) {
  reject_unknown(j, where,
                 {"iterations", "batch_size", "rollout_steps_per_iter", "rollout_buffer",
                  "disc_steps_per_iter", "policy_steps_per_iter", "disc_lr", "policy_lr",
                  "critic_lr", "seed", "policy_mode", "model", "eval_interval",
                  "eval_trajectories", "eval_horizon", "reg", "probes"});
  TrainConfig c;
  c.iterations = get_count(j, "iterations", where, c.iterations);
  c.batch_size = get_count(j, "batch_size", where, c.batch_size);
  c.rollout_steps_per_iter = get_count(j, "rollout_steps_per_iter", where, c.rollout_steps_per_iter);
  c.rollout_buffer = get_count(j, "rollout_buffer", where, c.rollout_buffer);
  c.disc_steps_per_iter = get_count(j, "disc_steps_per_iter", where, c.disc_steps_per_iter);
  c.policy_steps_per_iter = get_count(j, "policy_steps_per_iter", where, c.policy_steps_per_iter);
  c.disc_lr = get_number(j, "disc_lr", where, c.disc_lr);
  c.policy_lr = get_number(j, "policy_lr", where, c.policy_lr);
  c.critic_lr = get_number(j, "critic_lr", where, c.critic_lr);
  c.seed = get_count(j, "seed", where, c.seed);
  c.policy_mode = parse_policy_mode(get_string(j, "policy_mode", where, "exact_vi"));
  c.model = parse_reward_model(get_string(j, "model", where, "dbm"));
  c.eval_interval = get_count(j, "eval_interval", where, c.eval_interval);
  c.eval_trajectories = get_count(j, "eval_trajectories", where, c.eval_trajectories);
  c.eval_horizon = get_count(j, "eval_horizon", where, c.eval_horizon);
  if (j.contains("reg")) c.reg = regularizer_from_json(j["reg"], where + ".reg");
  if (j.contains("probes")) {
    if (!j["probes"].is_array()) throw ParameterError(where + ".probes: expected an array");
    for (std::size_t i = 0; i < j["probes"].size(); ++i) {
      c.probes.push_back(regularizer_from_json(j["probes"][i], where + ".probes[" + std::to_string(i) + "]"));
    }
  }
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw ParameterError(where + ": " + e.what());
  }
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

void write_policy_csv(std::ostream& os, const TabularPolicy& pi) {
  os << "s";
  for (std::size_t a = 0; a < pi.n_actions(); ++a) os << ",a" << a;
  os << '\n';
  for (std::size_t s = 0; s < pi.n_states(); ++s) {
    os << s;
    for (double v : pi.row(s)) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_reward_csv(std::ostream& os, const Matrix& reward) {
  os << "s,a,r\n";
  for (std::size_t s = 0; s < reward.rows(); ++s) {
    for (std::size_t a = 0; a < reward.cols(); ++a) {
      os << s << ',' << a << ',' << format_double(reward(s, a)) << '\n';
    }
  }
}

void write_heatmap_csv(std::ostream& os, const HeatmapGrid& grid) {
  os << "mu,log_sigma,divergence,normalized\n";
  for (std::size_t i = 0; i < grid.mu.size(); ++i) {
    for (std::size_t j = 0; j < grid.log_sigma.size(); ++j) {
      os << format_double(grid.mu[i]) << ',' << format_double(grid.log_sigma[j]) << ','
         << format_double(grid.raw(i, j)) << ',' << format_double(grid.values(i, j)) << '\n';
    }
  }
}

void write_metrics_header(std::ostream& os, const std::vector<std::string>& probe_names) {
  os << "iter,disc_loss";
  for (const auto& p : probe_names) os << ",mean_bregman_" << p;
  os << ",episodic_return,policy_tv\n";
}

void write_metrics_row(std::ostream& os, const MetricsRow& row) {
  os << row.iter << ',' << format_double(row.disc_loss);
  for (double v : row.mean_bregman) os << ',' << format_double(v);
  os << ',' << format_double(row.episodic_return) << ',' << format_double(row.policy_tv) << '\n';
  os.flush();
}

}  // namespace regmdp::io
