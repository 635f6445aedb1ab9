#include "regmdp/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "regmdp/error.hpp"
#include "regmdp/probability.hpp"

namespace regmdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kUnitSlack = 1e-12;
constexpr double kInverseTol = 1e-12;
constexpr int kInverseMaxIter = 200;

// Skips pow for the exponents q = 2 and q = 3 produce.
double upow(double x, double e) {
  if (e == 1.0) return x;
  if (e == 0.0) return 1.0;
  if (e == 2.0) return x * x;
  return std::pow(x, e);
}

double checked_unit(double x) {
  if (!(x > 0.0) || !(x <= 1.0 + kUnitSlack)) {
    std::ostringstream os;
    os << "argument " << x << " outside (0, 1]";
    throw DomainError(os.str());
  }
  return std::min(x, 1.0);
}

// Solves f'(x) = y on (0, 1) for a strictly decreasing f'. Newton steps that
// leave the current bracket are replaced by bisection.
double invert_f_prime(const RegularizerSpec& spec, double y) {
  double lo = 0.0;
  double hi = 1.0;
  double x = 0.5;
  for (int it = 0; it < kInverseMaxIter; ++it) {
    const double h = f_phi_prime(spec, x) - y;
    if (h == 0.0) return x;
    // f' decreasing: h > 0 means the root lies to the right.
    if (h > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double d = f_phi_second(spec, x);
    double next = (d < 0.0) ? x - h / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= kInverseTol || hi - lo <= kInverseTol) return next;
    x = next;
  }
  throw ConvergenceError("g_phi: inverse of f' did not converge for " + spec.describe());
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Shannon: return "shannon";
    case Family::Tsallis: return "tsallis";
    case Family::Exp: return "exp";
    case Family::Cos: return "cos";
    case Family::Sin: return "sin";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::Shannon, Family::Tsallis, Family::Exp, Family::Cos, Family::Sin}) {
    if (name == family_name(f)) return f;
  }
  throw ParameterError("unknown regularizer family '" + std::string(name) + "'");
}

RegularizerSpec RegularizerSpec::shannon(double lambda) {
  RegularizerSpec s;
  s.family = Family::Shannon;
  s.lambda = lambda;
  return s;
}

RegularizerSpec RegularizerSpec::tsallis(double k, double q, double lambda) {
  RegularizerSpec s;
  s.family = Family::Tsallis;
  s.lambda = lambda;
  s.k = k;
  s.q = q;
  return s;
}

RegularizerSpec RegularizerSpec::exp(double lambda, double exp_k, double exp_q) {
  RegularizerSpec s;
  s.family = Family::Exp;
  s.lambda = lambda;
  s.exp_k = exp_k;
  s.exp_q = exp_q;
  return s;
}

RegularizerSpec RegularizerSpec::cos(double lambda, double theta) {
  RegularizerSpec s;
  s.family = Family::Cos;
  s.lambda = lambda;
  s.theta = theta;
  return s;
}

RegularizerSpec RegularizerSpec::sin(double lambda, double theta) {
  RegularizerSpec s;
  s.family = Family::Sin;
  s.lambda = lambda;
  s.theta = theta;
  return s;
}

void RegularizerSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("lambda must be a positive finite number");
  }
  switch (family) {
    case Family::Shannon: break;
    case Family::Tsallis:
      if (!(k > 0.0) || !std::isfinite(k)) throw ParameterError("tsallis requires k > 0");
      if (!(q > 1.0) || !std::isfinite(q)) throw ParameterError("tsallis requires q > 1");
      break;
    case Family::Exp:
      if (!(exp_k >= 0.0) || !std::isfinite(exp_k)) throw ParameterError("exp requires k >= 0");
      if (!(exp_q >= 1.0) || !std::isfinite(exp_q)) throw ParameterError("exp requires q >= 1");
      if (exp_k == 0.0 && exp_q == 1.0) {
        throw ParameterError("exp with k = 0, q = 1 is degenerate (phi identically 0)");
      }
      break;
    case Family::Cos:
      if (!(theta > 0.0) || !(theta <= std::numbers::pi / 2.0)) {
        throw ParameterError("cos requires 0 < theta <= pi/2");
      }
      break;
    case Family::Sin:
      if (!(theta > 0.0) || !(theta * std::tan(theta) <= 2.0 + 1e-12)) {
        throw ParameterError(
            "sin requires 0 < theta with theta*tan(theta) <= 2 (theta <= 1.07687); "
            "larger theta makes x*phi(x) non-concave near x = 1");
      }
      break;
  }
}

std::string RegularizerSpec::describe() const {
  std::ostringstream os;
  os << family_name(family) << "(lambda=" << lambda;
  switch (family) {
    case Family::Shannon: break;
    case Family::Tsallis: os << ", k=" << k << ", q=" << q; break;
    case Family::Exp: os << ", k=" << exp_k << ", q=" << exp_q; break;
    case Family::Cos:
    case Family::Sin: os << ", theta=" << theta; break;
  }
  os << ")";
  return os.str();
}

std::vector<RegularizerSpec> default_family_specs(double lambda) {
  return {RegularizerSpec::shannon(lambda), RegularizerSpec::tsallis(1.0, 2.0, lambda),
          RegularizerSpec::exp(lambda), RegularizerSpec::cos(lambda),
          RegularizerSpec::sin(lambda)};
}

double phi(const RegularizerSpec& spec, double x) {
  x = checked_unit(x);
  switch (spec.family) {
    case Family::Shannon: return -std::log(x);
    case Family::Tsallis: return spec.k / (spec.q - 1.0) * (1.0 - upow(x, spec.q - 1.0));
    case Family::Exp: return spec.exp_q - std::pow(x, spec.exp_k) * std::pow(spec.exp_q, x);
    case Family::Cos: return std::cos(spec.theta * x) - std::cos(spec.theta);
    case Family::Sin: return std::sin(spec.theta) - std::sin(spec.theta * x);
  }
  return 0.0;
}

double phi_prime(const RegularizerSpec& spec, double x) {
  x = checked_unit(x);
  switch (spec.family) {
    case Family::Shannon: return -1.0 / x;
    case Family::Tsallis: return -spec.k * upow(x, spec.q - 2.0);
    case Family::Exp: {
      const double lq = std::log(spec.exp_q);
      return -std::pow(x, spec.exp_k) * std::pow(spec.exp_q, x) * (spec.exp_k / x + lq);
    }
    case Family::Cos: return -spec.theta * std::sin(spec.theta * x);
    case Family::Sin: return -spec.theta * std::cos(spec.theta * x);
  }
  return 0.0;
}

double f_phi(const RegularizerSpec& spec, double x) {
  if (x == 0.0) return 0.0;
  return x * phi(spec, x);
}

double f_phi_prime(const RegularizerSpec& spec, double x) {
  x = checked_unit(x);
  switch (spec.family) {
    case Family::Shannon: return -std::log(x) - 1.0;
    case Family::Tsallis:
      return spec.k / (spec.q - 1.0) * (1.0 - spec.q * upow(x, spec.q - 1.0));
    case Family::Exp: {
      const double lq = std::log(spec.exp_q);
      return spec.exp_q -
             std::pow(x, spec.exp_k) * std::pow(spec.exp_q, x) * (spec.exp_k + 1.0 + x * lq);
    }
    case Family::Cos: {
      const double t = spec.theta;
      return -std::cos(t) + std::cos(t * x) - t * x * std::sin(t * x);
    }
    case Family::Sin: {
      const double t = spec.theta;
      return std::sin(t) - std::sin(t * x) - t * x * std::cos(t * x);
    }
  }
  return 0.0;
}

double f_phi_second(const RegularizerSpec& spec, double x) {
  x = checked_unit(x);
  switch (spec.family) {
    case Family::Shannon: return -1.0 / x;
    case Family::Tsallis: return -spec.k * spec.q * upow(x, spec.q - 2.0);
    case Family::Exp: {
      const double kk = spec.exp_k;
      const double lq = std::log(spec.exp_q);
      const double inner = kk * (kk + 1.0 + x * lq) + x * lq * (kk + 1.0 + x * lq) + x * lq;
      return -std::pow(x, kk - 1.0) * std::pow(spec.exp_q, x) * inner;
    }
    case Family::Cos: {
      const double t = spec.theta;
      return -2.0 * t * std::sin(t * x) - t * t * x * std::cos(t * x);
    }
    case Family::Sin: {
      const double t = spec.theta;
      return -2.0 * t * std::cos(t * x) + t * t * x * std::sin(t * x);
    }
  }
  return 0.0;
}

double phi_at_zero(const RegularizerSpec& spec) {
  switch (spec.family) {
    case Family::Shannon: return kInf;
    case Family::Tsallis: return spec.k / (spec.q - 1.0);
    case Family::Exp: return spec.exp_k == 0.0 ? spec.exp_q - 1.0 : spec.exp_q;
    case Family::Cos: return 1.0 - std::cos(spec.theta);
    case Family::Sin: return std::sin(spec.theta);
  }
  return kInf;
}

double f_phi_prime_at_zero(const RegularizerSpec& spec) {
  // f'(0+) = phi(0+) for every finite family: x * phi'(x) -> 0.
  return phi_at_zero(spec);
}

double phi_extended(const RegularizerSpec& spec, double x) {
  if (x == 0.0) {
    if (spec.family == Family::Shannon) throw DomainError("phi(0) is infinite under shannon");
    return phi_at_zero(spec);
  }
  return phi(spec, x);
}

double f_phi_prime_extended(const RegularizerSpec& spec, double x) {
  if (x == 0.0) {
    if (spec.family == Family::Shannon) throw DomainError("f'(0) is infinite under shannon");
    return f_phi_prime_at_zero(spec);
  }
  return f_phi_prime(spec, x);
}

double g_phi(const RegularizerSpec& spec, double y) {
  if (std::isnan(y)) throw DomainError("g_phi: NaN argument");
  if (y >= f_phi_prime_at_zero(spec)) return 0.0;
  if (y <= f_phi_prime(spec, 1.0)) return 1.0;
  switch (spec.family) {
    case Family::Shannon: return std::min(1.0, std::exp(-y - 1.0));
    case Family::Tsallis: {
      const double base = (1.0 - (spec.q - 1.0) * y / spec.k) / spec.q;
      return std::clamp(upow(base, 1.0 / (spec.q - 1.0)), 0.0, 1.0);
    }
    default: return invert_f_prime(spec, y);
  }
}

double omega(const RegularizerSpec& spec, std::span<const double> p) {
  check_probability_vector(p, "omega argument");
  double acc = 0.0;
  for (double pa : p) {
    if (pa > 0.0) acc += f_phi(spec, pa);
  }
  return -spec.lambda * acc;
}

std::vector<double> grad_omega(const RegularizerSpec& spec, std::span<const double> p) {
  check_probability_vector(p, "grad_omega argument");
  std::vector<double> g(p.size());
  for (std::size_t a = 0; a < p.size(); ++a) {
    g[a] = -spec.lambda * f_phi_prime_extended(spec, p[a]);
  }
  return g;
}

}  // namespace regmdp
