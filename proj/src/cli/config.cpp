#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "regmdp/cli.hpp"
#include "regmdp/error.hpp"
#include "regmdp/io.hpp"

namespace regmdp::cli {

namespace {

using io::json;

constexpr const char* kFilePrefix = "file:";

std::pair<double, double> range_from_json(const json& j, const std::string& where) {
  const auto v = io::vector_from_json(j, where);
  if (v.size() != 2 || !(v[0] < v[1])) throw ParameterError(where + ": expected [lo, hi] with lo < hi");
  return {v[0], v[1]};
}

DivergenceSettings divergence_from_json(const json& j, const std::string& where) {
  io::reject_unknown(j, where, {"expert_mean", "expert_log_sigma", "mu_range", "log_sigma_range",
                                "resolution", "q"});
  DivergenceSettings d;
  d.expert_mean = io::get_number(j, "expert_mean", where, d.expert_mean);
  d.expert_log_sigma = io::get_number(j, "expert_log_sigma", where, d.expert_log_sigma);
  if (j.contains("mu_range")) std::tie(d.mu_lo, d.mu_hi) = range_from_json(j["mu_range"], where + ".mu_range");
  if (j.contains("log_sigma_range")) {
    std::tie(d.log_sigma_lo, d.log_sigma_hi) = range_from_json(j["log_sigma_range"], where + ".log_sigma_range");
  }
  if (j.contains("resolution")) {
    const auto r = io::vector_from_json(j["resolution"], where + ".resolution");
    if (r.size() != 2 || r[0] < 2 || r[1] < 2 || r[0] != std::floor(r[0]) || r[1] != std::floor(r[1])) {
      throw ParameterError(where + ".resolution: expected [n_mu, n_log_sigma], each an integer >= 2");
    }
    d.n_mu = static_cast<std::size_t>(r[0]);
    d.n_log_sigma = static_cast<std::size_t>(r[1]);
  }
  if (j.contains("q")) {
    d.q = io::vector_from_json(j["q"], where + ".q");
    if (d.q.empty()) throw ParameterError(where + ".q: needs at least one value");
    for (double q : d.q) {
      if (!(q >= 1.0) || !std::isfinite(q)) throw ParameterError(where + ".q: values must be >= 1");
    }
  }
  return d;
}

json divergence_to_json(const DivergenceSettings& d) {
  return {{"expert_mean", d.expert_mean},
          {"expert_log_sigma", d.expert_log_sigma},
          {"mu_range", {d.mu_lo, d.mu_hi}},
          {"log_sigma_range", {d.log_sigma_lo, d.log_sigma_hi}},
          {"resolution", {d.n_mu, d.n_log_sigma}},
          {"q", d.q}};
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw ParameterError("--seeds: expected a comma-separated list of nonnegative integers, got '" + text + "'");
    }
    out.push_back(std::stoull(item));
  }
  if (out.empty()) throw ParameterError("--seeds: empty list");
  return out;
}

ExperimentConfig parse_config(const json& j, const std::string& command,
                              const std::filesystem::path& base_dir) {
  const std::string where = "config";
  io::reject_unknown(j, where,
                     {"command", "environment", "mdp", "reward", "expert", "reg", "solver", "train",
                      "seeds", "demos", "demo_seed_offset", "divergence", "out", "verify",
                      "parallel", "only"});
  ExperimentConfig c;
  c.command = io::get_string(j, "command", where, command);
  if (c.command != command) {
    throw ParameterError(where + ".command: config is for '" + c.command + "', not '" + command + "'");
  }
  c.environment = io::get_string(j, "environment", where, c.environment);
  if (j.contains("mdp")) {
    if (j.contains("environment") && c.environment != "inline") {
      throw ParameterError(where + ": 'mdp' needs environment \"inline\" (or no environment key)");
    }
    c.environment = "inline";
    c.inline_mdp = io::mdp_from_json(j["mdp"], where + ".mdp");
  } else if (c.environment == "inline") {
    throw ParameterError(where + ": environment \"inline\" needs an 'mdp' object");
  }
  if (c.environment.rfind(kFilePrefix, 0) == 0) {
    std::filesystem::path p = c.environment.substr(std::string(kFilePrefix).size());
    if (p.is_relative()) p = base_dir / p;
    c.environment = kFilePrefix + p.string();
  }
  if (j.contains("reward")) c.reward = io::matrix_from_json(j["reward"], where + ".reward");
  if (j.contains("expert")) c.expert = io::matrix_from_json(j["expert"], where + ".expert");

  if (j.contains("train")) c.train = io::train_config_from_json(j["train"], where + ".train");
  // A top-level reg is authoritative; otherwise the training reg is used everywhere.
  if (j.contains("reg")) {
    c.reg = io::regularizer_from_json(j["reg"], where + ".reg");
    if (j.contains("train") && j["train"].contains("reg") && !(c.train.reg == c.reg)) {
      throw ParameterError(where + ": reg and train.reg disagree");
    }
    c.train.reg = c.reg;
  } else {
    c.reg = c.train.reg;
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    io::reject_unknown(s, where + ".solver", {"tol", "max_iterations", "conjugacy_tol"});
    c.solver.tol = io::get_number(s, "tol", where + ".solver", c.solver.tol);
    c.solver.max_iterations = io::get_count(s, "max_iterations", where + ".solver", c.solver.max_iterations);
    c.solver.conjugacy_tol = io::get_number(s, "conjugacy_tol", where + ".solver", c.solver.conjugacy_tol);
    if (!(c.solver.tol > 0.0) || !(c.solver.conjugacy_tol > 0.0) || c.solver.max_iterations == 0) {
      throw ParameterError(where + ".solver: tolerances and max_iterations must be positive");
    }
  }
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty()) throw ParameterError(where + ".seeds: expected a nonempty array");
    c.seeds.clear();
    for (const auto& v : j["seeds"]) {
      if (!v.is_number_unsigned()) throw ParameterError(where + ".seeds: expected nonnegative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  c.demos = io::get_count(j, "demos", where, c.demos);
  if (c.demos == 0) throw ParameterError(where + ".demos: must be positive");
  c.demo_seed_offset = io::get_count(j, "demo_seed_offset", where, c.demo_seed_offset);
  if (j.contains("divergence")) c.divergence = divergence_from_json(j["divergence"], where + ".divergence");
  c.out = io::get_string(j, "out", where, c.out.string());
  if (j.contains("verify")) {
    if (!j["verify"].is_boolean()) throw ParameterError(where + ".verify: expected a boolean");
    c.verify = j["verify"].get<bool>();
  }
  if (j.contains("parallel")) {
    if (!j["parallel"].is_boolean()) throw ParameterError(where + ".parallel: expected a boolean");
    c.parallel = j["parallel"].get<bool>();
  }
  if (j.contains("only")) {
    if (!j["only"].is_array()) throw ParameterError(where + ".only: expected an array of strings");
    for (const auto& id : j["only"]) {
      if (!id.is_string()) throw ParameterError(where + ".only: expected an array of strings");
      c.only.push_back(id.get<std::string>());
    }
  }
  return c;
}

json resolved_json(const ExperimentConfig& c) {
  json j{{"command", c.command},
         {"environment", c.environment},
         {"reg", io::to_json(c.reg)},
         {"solver",
          {{"tol", c.solver.tol},
           {"max_iterations", c.solver.max_iterations},
           {"conjugacy_tol", c.solver.conjugacy_tol}}},
         {"train", io::to_json(c.train)},
         {"seeds", c.seeds},
         {"demos", c.demos},
         {"demo_seed_offset", c.demo_seed_offset},
         {"divergence", divergence_to_json(c.divergence)},
         {"out", c.out.string()},
         {"verify", c.verify},
         {"parallel", c.parallel},
         {"only", c.only}};
  if (c.inline_mdp) j["mdp"] = io::to_json(*c.inline_mdp);
  if (c.reward) j["reward"] = io::to_json(*c.reward);
  if (c.expert) j["expert"] = io::to_json(*c.expert);
  return j;
}

Environment load_environment(const ExperimentConfig& cfg) {
  Environment env;
  if (cfg.inline_mdp) {
    env.mdp = *cfg.inline_mdp;
  } else if (cfg.environment.rfind(kFilePrefix, 0) == 0) {
    const std::filesystem::path p = cfg.environment.substr(std::string(kFilePrefix).size());
    env.mdp = io::mdp_from_json(io::read_json_file(p), p.string());
  } else {
    env = make_environment(cfg.environment);
  }
  if (cfg.reward) {
    if (cfg.reward->rows() != env.mdp.n_states || cfg.reward->cols() != env.mdp.n_actions) {
      throw ParameterError("config.reward: shape does not match the environment");
    }
    env.mdp.reward = *cfg.reward;
  }
  if (cfg.expert) {
    TabularPolicy pi{*cfg.expert};
    if (pi.n_states() != env.mdp.n_states || pi.n_actions() != env.mdp.n_actions) {
      throw ParameterError("config.expert: shape does not match the environment");
    }
    pi.validate();
    env.expert = std::move(pi);
  }
  env.mdp.validate();
  return env;
}

Interval t_interval(const std::vector<double>& values) {
  Interval out;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    sum += v;
    ++out.n;
  }
  if (out.n == 0) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    out.half_width = out.mean;
    return out;
  }
  out.mean = sum / static_cast<double>(out.n);
  if (out.n < 2) {
    out.half_width = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double ss = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) ss += (v - out.mean) * (v - out.mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(out.n - 1));
  const boost::math::students_t dist(static_cast<double>(out.n - 1));
  out.half_width = boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(out.n));
  return out;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("REGMDP_THREADS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) {
      throw ParameterError("REGMDP_THREADS must be a positive integer");
    }
    n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

}  // namespace regmdp::cli
