#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "regmdp/cli.hpp"
#include "regmdp/divergence.hpp"

namespace fs = std::filesystem;
using namespace regmdp;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "regmdp_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "regmdp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json small_rairl(const fs::path& out) {
  return {{"environment", "bandit:dense"},
          {"demos", 5000},
          {"out", out.string()},
          {"train",
           {{"iterations", 200},
            {"rollout_steps_per_iter", 20},
            {"batch_size", 100},
            {"rollout_buffer", 1000},
            {"eval_interval", 50},
            {"disc_lr", 0.05},
            {"reg", {{"family", "shannon"}, {"lambda", 1.0}}}}}};
}

}  // namespace

TEST_CASE("solve writes the softmax policy") {
  const auto dir = scratch("solve");
  const auto cfg = write_config(dir, {{"environment", "bandit:dense"}, {"reward", {{0, 0, 0, 1}}}});
  REQUIRE(run_cli({"solve", "--config", cfg.string(), "--out", (dir / "out").string()}) == cli::kOk);
  const auto rows = read_csv(dir / "out" / "policy.csv");
  REQUIRE(rows.size() == 2);
  const double z = 3 + std::exp(1.0);
  CHECK(std::stod(rows[1][1]) == doctest::Approx(1 / z));
  CHECK(std::stod(rows[1][4]) == doctest::Approx(std::exp(1.0) / z));
  CHECK(fs::exists(dir / "out" / "resolved_config.json"));
  CHECK(fs::exists(dir / "out" / "solution.json"));

  const auto zero = write_config(dir, {{"environment", "bandit:dense"}, {"reward", {{0, 0, 0, 0}}}});
  REQUIRE(run_cli({"solve", "--config", zero.string(), "--out", (dir / "zero").string()}) == cli::kOk);
  for (int a = 1; a <= 4; ++a) CHECK(std::stod(read_csv(dir / "zero" / "policy.csv")[1][a]) == doctest::Approx(0.25));
}

TEST_CASE("config errors exit 1") {
  const auto dir = scratch("errors");
  CHECK(run_cli({"solve", "--config", write_config(dir, {{"environment", "bandit:dense"}}).string(), "--out",
                 (dir / "a").string()}) == cli::kConfigError);
  CHECK(run_cli({"solve", "--config", write_config(dir, {{"enviroment", "bandit:dense"}}).string()}) ==
        cli::kConfigError);
  CHECK(run_cli({"solve", "--config", (dir / "missing.json").string()}) == cli::kConfigError);
  CHECK(run_cli({"rairl", "--seeds", "1,x"}) == cli::kConfigError);
  CHECK(run_cli({"bogus"}) == cli::kConfigError);
}

TEST_CASE("irl rewards, verify and domain failure") {
  const auto dir = scratch("irl");
  const auto cfg = write_config(dir, {{"environment", "bandit:dense"}, {"reg", {{"family", "shannon"}}}});
  REQUIRE(run_cli({"irl", "--config", cfg.string(), "--out", (dir / "dense").string()}) == cli::kOk);
  const auto rows = read_csv(dir / "dense" / "reward.csv");
  REQUIRE(rows.size() == 5);
  const double want[] = {-2.302585, -1.609438, -1.203973, -0.916291};
  for (int a = 0; a < 4; ++a) CHECK(std::stod(rows[a + 1][2]) == doctest::Approx(want[a]).epsilon(1e-6));

  const auto rnd = write_config(dir, {{"environment", "random:seed=7,s=10,a=4"},
                                      {"reg", {{"family", "tsallis"}, {"k", 1.0}, {"q", 2.0}}}});
  REQUIRE(run_cli({"irl", "--config", rnd.string(), "--out", (dir / "rnd").string(), "--verify"}) == cli::kOk);
  const auto v = nlohmann::json::parse(slurp(dir / "rnd" / "verify.json"));
  CHECK(v["max_state_tv"].get<double>() <= 1e-4);

  const auto sparse = write_config(dir, {{"environment", "bandit:sparse"}, {"reg", {{"family", "shannon"}}}});
  CHECK(run_cli({"irl", "--config", sparse.string(), "--out", (dir / "sparse").string()}) == cli::kNumericFailure);
}

TEST_CASE("rairl seeds, aggregate and determinism") {
  const auto dir = scratch("rairl");
  const auto cfg = write_config(dir, small_rairl(dir / "run"));
  REQUIRE(run_cli({"rairl", "--config", cfg.string(), "--seeds", "0,1,2,3,4"}) == cli::kOk);
  for (int s = 0; s < 5; ++s) CHECK(fs::exists(dir / "run" / ("metrics_seed" + std::to_string(s) + ".csv")));
  const auto agg = read_csv(dir / "run" / "aggregate.csv");
  REQUIRE(agg.size() == 5);
  CHECK(agg[0][0] == "iter");
  CHECK(agg[0][1] == "n");
  CHECK(agg[1][1] == "5");
  const auto bars = read_csv(dir / "run" / "reward_bars.csv");
  CHECK(bars.size() == 5);

  // t interval with n - 1 degrees of freedom: t_{0.975, 4} = 2.776445
  const auto iv = cli::t_interval({1, 2, 3, 4, 5});
  CHECK(iv.mean == doctest::Approx(3.0));
  CHECK(iv.half_width == doctest::Approx(2.776445 * std::sqrt(2.5) / std::sqrt(5.0)).epsilon(1e-6));
  CHECK(std::isnan(cli::t_interval({1.0}).half_width));

  REQUIRE(run_cli({"rairl", "--config", cfg.string(), "--seeds", "3", "--out", (dir / "again").string()}) ==
          cli::kOk);
  CHECK(slurp(dir / "run" / "metrics_seed3.csv") == slurp(dir / "again" / "metrics_seed3.csv"));
  CHECK(slurp(dir / "run" / "reward_seed3.csv") == slurp(dir / "again" / "reward_seed3.csv"));

  REQUIRE(run_cli({"rairl", "--config", cfg.string(), "--seeds", "0,1,2,3,4", "--parallel", "--out",
                   (dir / "par").string()}) == cli::kOk);
  for (const char* f : {"metrics_seed0.csv", "metrics_seed4.csv", "aggregate.csv", "reward_bars.csv"}) {
    CHECK(slurp(dir / "run" / f) == slurp(dir / "par" / f));
  }
}

TEST_CASE("divergence heatmaps") {
  const auto dir = scratch("div");
  const auto cfg = write_config(dir, {{"divergence", {{"resolution", {21, 21}}}}});
  REQUIRE(run_cli({"divergence", "--config", cfg.string(), "--out", dir.string()}) == cli::kOk);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().filename().string().rfind("heatmap_q", 0) == 0;
  CHECK(n == 5);
  const auto rows = read_csv(dir / "heatmap_q1.csv");
  REQUIRE(rows.size() == 21 * 21 + 1);
  const auto expert = gaussian_1d(0.0, std::exp(-3.0));
  bool saw_expert = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double mu = std::stod(rows[i][0]), ls = std::stod(rows[i][1]), div = std::stod(rows[i][2]);
    const double kl = gaussian_kl(gaussian_1d(mu, std::exp(ls)), expert);
    CHECK(std::abs(div - kl) <= 1e-10 * std::max(1.0, kl));
    if (std::abs(mu) < 1e-12 && std::abs(ls + 3) < 1e-12) {
      saw_expert = true;
      CHECK(std::abs(div) <= 1e-12);
    }
  }
  CHECK(saw_expert);
}

TEST_CASE("shipped configs parse") {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(REGMDP_CONFIG_DIR)) {
    if (e.path().extension() != ".json" || e.path().filename() == "schema.json") continue;
    CAPTURE(e.path().string());
    std::ifstream in(e.path());
    const auto j = nlohmann::json::parse(in);
    const std::string command = j.at("command").get<std::string>();
    const auto cfg = cli::parse_config(j, command, e.path().parent_path());
    if (command != "divergence" && command != "validate") CHECK_NOTHROW(cli::load_environment(cfg));
    ++n;
  }
  CHECK(n >= 6);
}
