#pragma once

// Policy regularizers of the form
//
//   Omega(p) = -lambda * sum_a p(a) * phi(p(a))
//
// with phi drawn from five families. Everything downstream goes through
// f(x) = x * phi(x): its derivative f'(x) drives the optimal-policy map (through
// its inverse g) and the closed-form IRL reward. Each family is valid only
// where f is strictly concave on (0, 1], so that f' is strictly decreasing and
// g is well defined.

#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace regmdp {

enum class Family { Shannon, Tsallis, Exp, Cos, Sin };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

inline constexpr double kCosDefaultTheta = std::numbers::pi / 2.0;
// Sin is concave on (0, 1] only for theta * tan(theta) <= 2.
inline constexpr double kSinDefaultTheta = 1.0;
inline constexpr double kSinMaxTheta = 1.0768739863118149;

struct RegularizerSpec {
  Family family = Family::Shannon;
  double lambda = 1.0;
  // Tsallis: phi(x) = k / (q - 1) * (1 - x^(q-1))
  double k = 1.0;
  double q = 2.0;
  // Cos: phi(x) = cos(theta x) - cos(theta); Sin: phi(x) = sin(theta) - sin(theta x)
  double theta = kCosDefaultTheta;
  // Exp: phi(x) = exp_q - x^exp_k * exp_q^x; defaults give e - e^x
  double exp_k = 0.0;
  double exp_q = std::numbers::e;

  static RegularizerSpec shannon(double lambda = 1.0);
  static RegularizerSpec tsallis(double k, double q, double lambda = 1.0);
  static RegularizerSpec exp(double lambda = 1.0, double exp_k = 0.0,
                             double exp_q = std::numbers::e);
  static RegularizerSpec cos(double lambda = 1.0, double theta = kCosDefaultTheta);
  static RegularizerSpec sin(double lambda = 1.0, double theta = kSinDefaultTheta);

  // Throws ParameterError on an invalid parameter combination.
  void validate() const;

  std::string describe() const;

  friend bool operator==(const RegularizerSpec&, const RegularizerSpec&) = default;
};

// One spec per family with default parameters.
std::vector<RegularizerSpec> default_family_specs(double lambda = 1.0);

// Scalar functions on x in (0, 1]. DomainError outside that range.
double phi(const RegularizerSpec& spec, double x);
double phi_prime(const RegularizerSpec& spec, double x);
double f_phi(const RegularizerSpec& spec, double x);  // defined at x = 0 as the limit 0
double f_phi_prime(const RegularizerSpec& spec, double x);
double f_phi_second(const RegularizerSpec& spec, double x);

// Limits as x -> 0+. +infinity for Shannon.
double phi_at_zero(const RegularizerSpec& spec);
double f_phi_prime_at_zero(const RegularizerSpec& spec);

// phi / f' extended to x = 0 by their limits. DomainError when the limit is
// infinite (Shannon).
double phi_extended(const RegularizerSpec& spec, double x);
double f_phi_prime_extended(const RegularizerSpec& spec, double x);

// Inverse of f'. Returns 0 when y >= f'(0+), 1 when y <= f'(1).
double g_phi(const RegularizerSpec& spec, double y);

// Omega(p) = -lambda * sum p phi(p); zero entries contribute 0.
double omega(const RegularizerSpec& spec, std::span<const double> p);

// Component a is -lambda * f'(p(a)).
std::vector<double> grad_omega(const RegularizerSpec& spec, std::span<const double> p);

}  // namespace regmdp
