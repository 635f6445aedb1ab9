#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "regmdp/cli.hpp"
#include "regmdp/divergence.hpp"
#include "regmdp/error.hpp"
#include "regmdp/io.hpp"
#include "regmdp/irl.hpp"
#include "regmdp/validation.hpp"

namespace regmdp::cli {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  return out;
}

void prepare_out(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw ParameterError("cannot create output directory " + cfg.out.string() + ": " + ec.message());
  io::write_json_file(cfg.out / "resolved_config.json", resolved_json(cfg));
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const InvariantError*>(&e)) {
    return kConfigError;
  }
  if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const NumericError*>(&e) ||
      dynamic_cast<const DomainError*>(&e)) {
    return kNumericFailure;
  }
  return kNumericFailure;
}

std::string q_label(double q) {
  std::ostringstream os;
  os << q;
  return os.str();
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  int code = kOk;
  std::string error;
  TrainMetrics metrics;
  Matrix reward;
};

SeedOutcome run_seed(const ExperimentConfig& cfg, const Environment& env, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  const std::string suffix = "_seed" + std::to_string(seed);
  try {
    std::ofstream metrics = open_out(cfg.out / ("metrics" + suffix + ".csv"));
    TrainConfig train = cfg.train;
    train.seed = seed;
    DemoSet demos = sample_demos(env.mdp, *env.expert, cfg.demos, cfg.demo_seed_offset + seed);
    const std::vector<RegularizerSpec> probes =
        train.probes.empty() ? std::vector<RegularizerSpec>{train.reg} : train.probes;
    std::vector<std::string> names;
    for (const auto& p : probes) names.push_back(probe_label(p));
    io::write_metrics_header(metrics, names);
    // Rows are written as they arrive so a later failure keeps them.
    TrainResult res = rairl_train(env.mdp, demos, train, [&](const MetricsRow& row) {
      io::write_metrics_row(metrics, row);
      metrics.flush();
    });
    out.metrics = res.metrics;
    out.reward = reward_table(res.model, train.reg);
    std::ofstream pol = open_out(cfg.out / ("policy" + suffix + ".csv"));
    io::write_policy_csv(pol, res.policy);
    std::ofstream rew = open_out(cfg.out / ("reward" + suffix + ".csv"));
    io::write_reward_csv(rew, out.reward);
    io::write_json_file(cfg.out / ("model" + suffix + ".json"), io::to_json(res.model));
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.code = exit_code_for(e);
    out.error = e.what();
  }
  return out;
}

// Per-iteration mean and 95% interval over the seeds that finished.
void write_aggregate(const fs::path& path, const std::vector<SeedOutcome>& runs) {
  std::vector<const SeedOutcome*> done;
  for (const auto& r : runs) {
    if (r.ok) done.push_back(&r);
  }
  if (done.empty()) return;
  const auto& names = done.front()->metrics.probe_names;
  std::vector<std::string> columns{"disc_loss"};
  for (const auto& n : names) columns.push_back("mean_bregman_" + n);
  columns.push_back("episodic_return");
  columns.push_back("policy_tv");

  std::map<std::size_t, std::vector<std::vector<double>>> by_iter;
  for (const SeedOutcome* r : done) {
    for (const auto& row : r->metrics.rows) {
      std::vector<double> v{row.disc_loss};
      v.insert(v.end(), row.mean_bregman.begin(), row.mean_bregman.end());
      v.push_back(row.episodic_return);
      v.push_back(row.policy_tv);
      by_iter[row.iter].push_back(std::move(v));
    }
  }
  std::ofstream out = open_out(path);
  out << "iter,n";
  for (const auto& c : columns) out << ',' << c << "_mean," << c << "_lo," << c << "_hi";
  out << '\n';
  for (const auto& [iter, rows] : by_iter) {
    out << iter << ',' << rows.size();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::vector<double> vals;
      for (const auto& r : rows) vals.push_back(r[c]);
      const Interval iv = t_interval(vals);
      out << ',' << io::format_double(iv.mean) << ',' << io::format_double(iv.mean - iv.half_width)
          << ',' << io::format_double(iv.mean + iv.half_width);
    }
    out << '\n';
  }
}

// Per-action learned reward after per-state mean-centering, averaged over
// seeds, next to the centered ground truth when the expert allows one.
void write_reward_bars(const fs::path& path, const std::vector<SeedOutcome>& runs,
                       const Environment& env, const RegularizerSpec& spec) {
  std::vector<const Matrix*> rewards;
  for (const auto& r : runs) {
    if (r.ok) rewards.push_back(&r.reward);
  }
  if (rewards.empty()) return;
  std::optional<Matrix> truth;
  try {
    truth = exact_irl_reward(*env.expert, spec);
  } catch (const DomainError&) {
  }
  auto centered = [](const Matrix& m, std::size_t s) {
    double mean = 0.0;
    for (double v : m.row(s)) mean += v;
    mean /= static_cast<double>(m.cols());
    std::vector<double> out;
    for (double v : m.row(s)) out.push_back(v - mean);
    return out;
  };
  std::ofstream out = open_out(path);
  out << "s,a,reward_mean,reward_lo,reward_hi,ground_truth\n";
  const Matrix& first = *rewards.front();
  for (std::size_t s = 0; s < first.rows(); ++s) {
    std::vector<std::vector<double>> cs;
    for (const Matrix* m : rewards) cs.push_back(centered(*m, s));
    const auto gt = truth ? centered(*truth, s) : std::vector<double>(first.cols(), std::nan(""));
    for (std::size_t a = 0; a < first.cols(); ++a) {
      std::vector<double> vals;
      for (const auto& c : cs) vals.push_back(c[a]);
      const Interval iv = t_interval(vals);
      out << s << ',' << a << ',' << io::format_double(iv.mean) << ','
          << io::format_double(iv.mean - iv.half_width) << ','
          << io::format_double(iv.mean + iv.half_width) << ',' << io::format_double(gt[a]) << '\n';
    }
  }
}

}  // namespace

int cmd_solve(const ExperimentConfig& cfg, const Environment& env) {
  if (!env.mdp.reward) {
    throw ParameterError("solve: environment '" + cfg.environment + "' has no reward; add a 'reward' table");
  }
  const ValueSolution sol = regularized_value_iteration(env.mdp, cfg.reg, cfg.solver);
  prepare_out(cfg);
  io::write_json_file(cfg.out / "solution.json", io::to_json(sol));
  std::ofstream pol = open_out(cfg.out / "policy.csv");
  io::write_policy_csv(pol, sol.policy);
  std::cout << "solved in " << sol.iterations << " sweeps; wrote " << (cfg.out / "solution.json").string()
            << '\n';
  return kOk;
}

int cmd_irl(const ExperimentConfig& cfg, const Environment& env) {
  if (!env.expert) {
    throw ParameterError("irl: environment '" + cfg.environment + "' has no expert; add an 'expert' table");
  }
  const Matrix reward = exact_irl_reward(*env.expert, cfg.reg);
  prepare_out(cfg);
  std::ofstream out = open_out(cfg.out / "reward.csv");
  io::write_reward_csv(out, reward);
  std::cout << "wrote " << (cfg.out / "reward.csv").string() << '\n';
  if (!cfg.verify) return kOk;
  const ValueSolution sol = regularized_value_iteration(env.mdp, reward, cfg.reg, cfg.solver);
  const double tv = max_state_tv(sol.policy, *env.expert);
  io::write_json_file(cfg.out / "verify.json", {{"max_state_tv", tv}, {"tolerance", 1e-4}});
  std::cout << "verify: max per-state tv to the expert " << io::format_double(tv) << '\n';
  return tv <= 1e-4 ? kOk : kInvariantFailure;
}

int cmd_rairl(const ExperimentConfig& cfg, const Environment& env) {
  if (!env.expert) {
    throw ParameterError("rairl: environment '" + cfg.environment + "' has no expert to draw demonstrations from");
  }
  cfg.train.validate();
  prepare_out(cfg);
  std::vector<SeedOutcome> runs(cfg.seeds.size());
  if (cfg.parallel && cfg.seeds.size() > 1) {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t workers = worker_count(cfg.seeds.size());
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) runs[i] = run_seed(cfg, env, cfg.seeds[i]);
      });
    }
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) runs[i] = run_seed(cfg, env, cfg.seeds[i]);
  }
  int code = kOk;
  for (const auto& r : runs) {
    if (r.ok) {
      const auto& last = r.metrics.rows.back();
      std::cout << "seed " << r.seed << ": iter " << last.iter << ", mean bregman "
                << io::format_double(last.mean_bregman.front()) << ", policy tv "
                << io::format_double(last.policy_tv) << '\n';
    } else {
      std::cerr << "seed " << r.seed << " failed: " << r.error << '\n';
      code = std::max(code, r.code);
    }
  }
  write_aggregate(cfg.out / "aggregate.csv", runs);
  write_reward_bars(cfg.out / "reward_bars.csv", runs, env, cfg.train.reg);
  return code;
}

int cmd_divergence(const ExperimentConfig& cfg) {
  const DivergenceSettings& d = cfg.divergence;
  const DiagGaussian expert = gaussian_1d(d.expert_mean, std::exp(d.expert_log_sigma));
  prepare_out(cfg);
  for (double q : d.q) {
    const HeatmapGrid grid =
        heatmap_grid(expert, d.mu_lo, d.mu_hi, d.log_sigma_lo, d.log_sigma_hi, d.n_mu, d.n_log_sigma, q);
    const fs::path path = cfg.out / ("heatmap_q" + q_label(q) + ".csv");
    std::ofstream out = open_out(path);
    io::write_heatmap_csv(out, grid);
    std::cout << "q=" << q << ": fraction below 0.1 " << io::format_double(fraction_below(grid, 0.1))
              << ", wrote " << path.string() << '\n';
  }
  return kOk;
}

int cmd_validate(const ExperimentConfig& cfg) {
  bool ok = true;
  auto print = [&](const CheckResult& r) {
    ok = ok && r.passed;
    std::cout << format_check(r) << std::endl;
  };
  std::cout << "-- module invariants\n";
  run_invariants(print);
  std::cout << "-- acceptance criteria\n";
  ValidationOptions opts;
  opts.only = cfg.only;
  opts.sink = print;
  run_acceptance(opts);
  std::cout << (ok ? "all checks passed" : "some checks FAILED") << '\n';
  return ok ? kOk : kInvariantFailure;
}

int run(int argc, char** argv) {
  CLI::App app{"Regularized MDP solver, IRL and adversarial imitation on tabular problems"};
  app.require_subcommand(1);
  struct Flags {
    std::string config;
    std::string out;
    std::string seeds;
    std::string only;
    bool verify = false;
    bool parallel = false;
  } flags;
  const char* names[] = {"solve", "irl", "rairl", "divergence", "validate"};
  const char* help[] = {"regularized value iteration on an environment with a reward",
                        "closed-form IRL reward of an expert",
                        "adversarial training over a list of seeds",
                        "Gaussian Tsallis divergence heatmaps",
                        "run every invariant and acceptance check"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
    if (std::string(names[i]) == "rairl") {
      sub->add_option("--seeds", flags.seeds, "comma-separated seeds (overrides the config)");
      sub->add_flag("--parallel", flags.parallel, "run seeds on worker threads (REGMDP_THREADS caps them)");
    }
    if (std::string(names[i]) == "irl") {
      sub->add_flag("--verify", flags.verify, "re-solve and report the max per-state tv to the expert");
    }
    if (std::string(names[i]) == "validate") {
      sub->add_option("--only", flags.only, "comma-separated acceptance criteria to run");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  Environment env;
  try {
    nlohmann::json j = nlohmann::json::object();
    fs::path base = ".";
    if (!flags.config.empty()) {
      j = io::read_json_file(flags.config);
      base = fs::path(flags.config).parent_path();
      if (base.empty()) base = ".";
    }
    cfg = parse_config(j, command, base);
    if (!flags.out.empty()) cfg.out = flags.out;
    if (!flags.seeds.empty()) cfg.seeds = parse_seed_list(flags.seeds);
    if (flags.verify) cfg.verify = true;
    if (flags.parallel) cfg.parallel = true;
    if (!flags.only.empty()) {
      cfg.only.clear();
      std::stringstream ss(flags.only);
      std::string id;
      while (std::getline(ss, id, ',')) cfg.only.push_back(id);
    }
    if (command != "divergence" && command != "validate") env = load_environment(cfg);
    if (cfg.parallel) (void)worker_count(1);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (command == "solve") return cmd_solve(cfg, env);
    if (command == "irl") return cmd_irl(cfg, env);
    if (command == "rairl") return cmd_rairl(cfg, env);
    if (command == "divergence") return cmd_divergence(cfg);
    return cmd_validate(cfg);
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    std::cerr << (code == kConfigError ? "config error: " : "numeric failure: ") << e.what() << '\n';
    return code;
  }
}

}  // namespace regmdp::cli
