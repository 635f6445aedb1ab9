// Runs the acceptance criteria and prints one PASS/FAIL line each.
// Usage: regmdp_acceptance [id ...]

#include <iostream>

#include "regmdp/validation.hpp"

int main(int argc, char** argv) {
  regmdp::ValidationOptions opts;
  for (int i = 1; i < argc; ++i) opts.only.emplace_back(argv[i]);
  bool ok = true;
  opts.sink = [&](const regmdp::CheckResult& r) {
    ok = ok && r.passed;
    std::cout << regmdp::format_check(r) << std::endl;
  };
  regmdp::run_acceptance(opts);
  return ok ? 0 : 1;
}
