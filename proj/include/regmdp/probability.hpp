#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace regmdp {

inline constexpr double kSimplexTolerance = 1e-9;

// Throws InvariantError unless entries are finite, >= 0 and sum to 1 within tol.
void check_probability_vector(std::span<const double> p, std::string_view what,
                              double tol = kSimplexTolerance);

// 0.5 * sum |p - q|
double total_variation(std::span<const double> p, std::span<const double> q);

// Numerically stable softmax of logits.
std::vector<double> softmax(std::span<const double> logits);
void softmax_into(std::span<const double> logits, std::span<double> out);

double log_sum_exp(std::span<const double> x);

}  // namespace regmdp
