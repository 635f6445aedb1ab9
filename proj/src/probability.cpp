#include "regmdp/probability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "regmdp/error.hpp"

namespace regmdp {

void check_probability_vector(std::span<const double> p, std::string_view what, double tol) {
  if (p.empty()) throw InvariantError(std::string(what) + ": empty probability vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0) {
      std::ostringstream os;
      os << what << ": entry " << i << " = " << p[i] << " is not a probability";
      throw InvariantError(os.str());
    }
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > tol) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": entries sum to " << sum << ", expected 1";
    throw InvariantError(os.str());
  }
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  softmax_into(logits, out);
  return out;
}

}  // namespace regmdp
