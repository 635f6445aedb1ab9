#pragma once

// Acceptance criteria and module invariant checks, shared by the acceptance
// test binary and `regmdp validate`.

#include <functional>
#include <string>
#include <vector>

#include "regmdp/rairl.hpp"

namespace regmdp {

struct CheckResult {
  std::string id;       // "1".."10" for acceptance criteria, a short slug otherwise
  std::string title;
  bool passed = false;
  std::string detail;   // measured values, or the error text
  double seconds = 0.0;
};

using CheckSink = std::function<void(const CheckResult&)>;

struct ValidationOptions {
  // Acceptance criterion ids to run; all when empty.
  std::vector<std::string> only;
  CheckSink sink;
};

// Training setups used by the bandit and grid acceptance checks (and shipped
// as example configs).
TrainConfig bandit_dense_config();
TrainConfig bandit_sparse_config();
TrainConfig grid_config();
inline constexpr std::size_t kBanditDemos = 100'000;
inline constexpr std::size_t kGridDemos = 10'000;
inline constexpr std::size_t kAcceptanceSeeds = 5;
inline constexpr std::size_t kGridSeeds = 3;

// Criteria 1..10. Criterion 10 also checks the wall time of everything run
// before it, so it should come last.
std::vector<CheckResult> run_acceptance(const ValidationOptions& options = {});

// Desk-scale invariant and oracle checks for every module.
std::vector<CheckResult> run_invariants(const CheckSink& sink = {});

// "PASS 3  shaping invariance  (worst tv 2.1e-12)"
std::string format_check(const CheckResult& r);

}  // namespace regmdp
