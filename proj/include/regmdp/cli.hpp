#pragma once

// The `regmdp` command-line tool: config handling and the five subcommands.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "regmdp/envs.hpp"
#include "regmdp/rairl.hpp"

namespace regmdp::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNumericFailure = 2, kInvariantFailure = 3 };

struct DivergenceSettings {
  double expert_mean = 0.0;
  double expert_log_sigma = -3.0;
  double mu_lo = -2.0, mu_hi = 2.0;
  double log_sigma_lo = -6.0, log_sigma_hi = 0.0;
  std::size_t n_mu = 101, n_log_sigma = 101;
  std::vector<double> q{1.0, 1.25, 1.5, 1.75, 2.0};
};

struct ExperimentConfig {
  std::string command;
  std::string environment = "bandit:dense";
  // Set when the config embeds the MDP ("environment": "inline").
  std::optional<TabularMdp> inline_mdp;
  // Explicit tables override what the environment provides.
  std::optional<Matrix> reward;
  std::optional<Matrix> expert;
  RegularizerSpec reg;
  ValueIterationOptions solver;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::size_t demos = 10'000;
  std::uint64_t demo_seed_offset = 1000;
  DivergenceSettings divergence;
  std::filesystem::path out = "out";
  bool verify = false;
  bool parallel = false;
  // Acceptance criteria to run under `validate`; all when empty.
  std::vector<std::string> only;
};

// Parses and validates a config document for `command`. Relative file:
// environment paths resolve against base_dir. Throws ParameterError.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& command,
                              const std::filesystem::path& base_dir = ".");

// The config with every default filled in.
nlohmann::json resolved_json(const ExperimentConfig& cfg);

// Builds the environment named in the config, applying reward/expert overrides.
Environment load_environment(const ExperimentConfig& cfg);

// "1,2,3" -> {1, 2, 3}. ParameterError on anything else.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Mean and half-width of the two-sided 95% Student-t interval (n - 1 degrees
// of freedom). NaN half-width for fewer than two finite values; non-finite
// values are skipped.
struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;
};
Interval t_interval(const std::vector<double>& values);

// Worker count for seed sweeps: REGMDP_THREADS when set, else the hardware
// concurrency, never more than jobs.
std::size_t worker_count(std::size_t jobs);

int cmd_solve(const ExperimentConfig& cfg, const Environment& env);
int cmd_irl(const ExperimentConfig& cfg, const Environment& env);
int cmd_rairl(const ExperimentConfig& cfg, const Environment& env);
int cmd_divergence(const ExperimentConfig& cfg);
int cmd_validate(const ExperimentConfig& cfg);

// Full entry point used by main().
int run(int argc, char** argv);

}  // namespace regmdp::cli
