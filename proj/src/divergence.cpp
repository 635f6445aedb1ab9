#include "regmdp/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "regmdp/error.hpp"
#include "regmdp/probability.hpp"

namespace regmdp {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void check_tsallis_q(double q) {
  if (!(q >= 1.0) || !std::isfinite(q)) throw ParameterError("Tsallis index q must be >= 1");
}

void check_same_dim(const DiagGaussian& a, const DiagGaussian& b) {
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) throw ParameterError("Gaussians of different dimension");
}

// log int p^q over R^d for a diagonal Gaussian.
double log_power_integral(const DiagGaussian& g, double q) {
  double r = 0.0;
  for (double sd : g.stddev) {
    r += kHalfLog2Pi + std::log(sd) - std::log(q) / (2.0 * (1.0 - q));
  }
  return (1.0 - q) * r;
}

// Log-partition of N(nu, sigma^2) in natural parameters, per dimension.
double log_partition(double nu, double sigma) {
  return nu * nu / (2.0 * sigma * sigma) + kHalfLog2Pi + std::log(sigma);
}

}  // namespace

double bregman_discrete(std::span<const double> p1, std::span<const double> p2,
                        const RegularizerSpec& spec) {
  check_probability_vector(p1, "bregman p1");
  check_probability_vector(p2, "bregman p2");
  if (p1.size() != p2.size()) throw InvariantError("bregman: distributions of different size");
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t a = 0; a < p1.size(); ++a) {
    if (p1[a] > 0.0) {
      if (p2[a] == 0.0 && spec.family == Family::Shannon) {
        throw DomainError("bregman: p2(" + std::to_string(a) +
                          ") = 0 where p1 > 0, divergence is infinite under shannon");
      }
      lhs += p1[a] * (f_phi_prime_extended(spec, p2[a]) - phi(spec, p1[a]));
    }
    if (p2[a] > 0.0) rhs += p2[a] * (f_phi_prime(spec, p2[a]) - phi(spec, p2[a]));
  }
  return spec.lambda * (lhs - rhs);
}

double mean_bregman(const TabularPolicy& policy, const TabularPolicy& expert,
                    std::span<const std::size_t> states, const RegularizerSpec& spec) {
  if (states.empty()) throw InvariantError("mean_bregman: empty state list");
  double acc = 0.0;
  for (std::size_t s : states) acc += bregman_discrete(policy.row(s), expert.row(s), spec);
  return acc / static_cast<double>(states.size());
}

void DiagGaussian::validate() const {
  if (mean.empty() || mean.size() != stddev.size()) {
    throw ParameterError("Gaussian mean and stddev must be nonempty and of equal length");
  }
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (!std::isfinite(mean[i])) throw ParameterError("Gaussian mean must be finite");
    if (!(stddev[i] > 0.0) || !std::isfinite(stddev[i])) {
      throw ParameterError("Gaussian stddev must be positive");
    }
  }
}

double DiagGaussian::log_density(std::span<const double> x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (x[i] - mean[i]) / stddev[i];
    acc += -0.5 * z * z - kHalfLog2Pi - std::log(stddev[i]);
  }
  return acc;
}

double DiagGaussian::density(std::span<const double> x) const { return std::exp(log_density(x)); }

DiagGaussian gaussian_1d(double mean, double stddev) { return {{mean}, {stddev}}; }

double gaussian_tsallis_entropy(const DiagGaussian& g, double q, double k) {
  g.validate();
  check_tsallis_q(q);
  if (q == 1.0) {
    double h = 0.0;
    for (double sd : g.stddev) h += kHalfLog2Pi + 0.5 + std::log(sd);
    return k * h;
  }
  // -expm1 keeps precision when int p^q is close to 1.
  return -k * std::expm1(log_power_integral(g, q)) / (q - 1.0);
}

double gaussian_reward_baseline(const DiagGaussian& g, double q, double k) {
  if (q == 1.0) {
    g.validate();
    return -k;
  }
  return (q - 1.0) * gaussian_tsallis_entropy(g, q, k) - k;
}

double gaussian_kl(const DiagGaussian& p, const DiagGaussian& p_hat) {
  check_same_dim(p, p_hat);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const double s = p.stddev[i];
    const double sh = p_hat.stddev[i];
    const double dm = p.mean[i] - p_hat.mean[i];
    acc += std::log(sh / s) + (s * s + dm * dm) / (2.0 * sh * sh) - 0.5;
  }
  return acc;
}

double gaussian_bregman_tsallis(const DiagGaussian& p, const DiagGaussian& p_hat, double q) {
  check_same_dim(p, p_hat);
  check_tsallis_q(q);
  if (q == 1.0) return gaussian_kl(p, p_hat);
  // log int p * p_hat^(q-1): natural parameters add, so the integral is a ratio
  // of log-partitions.
  double log_i = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const double s2 = p.stddev[i] * p.stddev[i];
    const double h2 = p_hat.stddev[i] * p_hat.stddev[i];
    const double a = 1.0 / s2 + (q - 1.0) / h2;
    const double b = p.mean[i] / s2 + (q - 1.0) * p_hat.mean[i] / h2;
    const double composite = 0.5 * b * b / a + kHalfLog2Pi - 0.5 * std::log(a);
    log_i += composite - log_partition(p.mean[i], p.stddev[i]) -
             (q - 1.0) * log_partition(p_hat.mean[i], p_hat.stddev[i]);
  }
  const double i_val = std::exp(log_i);
  return q / (q - 1.0) - q / (q - 1.0) * i_val - gaussian_tsallis_entropy(p, q, 1.0) -
         (q - 1.0) * gaussian_tsallis_entropy(p_hat, q, 1.0);
}

HeatmapGrid heatmap_grid(const DiagGaussian& expert, double mu_lo, double mu_hi,
                         double log_sigma_lo, double log_sigma_hi, std::size_t n_mu,
                         std::size_t n_log_sigma, double q) {
  expert.validate();
  if (expert.dim() != 1) throw ParameterError("heatmap_grid needs a one-dimensional expert");
  if (n_mu < 2 || n_log_sigma < 2) throw ParameterError("heatmap_grid needs >= 2 points per axis");
  if (!(mu_hi > mu_lo) || !(log_sigma_hi > log_sigma_lo)) {
    throw ParameterError("heatmap_grid: empty range");
  }
  HeatmapGrid g;
  g.mu.resize(n_mu);
  g.log_sigma.resize(n_log_sigma);
  for (std::size_t i = 0; i < n_mu; ++i) {
    g.mu[i] = mu_lo + (mu_hi - mu_lo) * static_cast<double>(i) / static_cast<double>(n_mu - 1);
  }
  for (std::size_t j = 0; j < n_log_sigma; ++j) {
    g.log_sigma[j] = log_sigma_lo + (log_sigma_hi - log_sigma_lo) * static_cast<double>(j) /
                                        static_cast<double>(n_log_sigma - 1);
  }
  g.raw = Matrix(n_mu, n_log_sigma);
  double peak = 0.0;
  for (std::size_t i = 0; i < n_mu; ++i) {
    for (std::size_t j = 0; j < n_log_sigma; ++j) {
      const double v =
          gaussian_bregman_tsallis(gaussian_1d(g.mu[i], std::exp(g.log_sigma[j])), expert, q);
      g.raw(i, j) = v;
      peak = std::max(peak, v);
    }
  }
  g.values = g.raw;
  if (peak > 0.0) {
    for (double& v : g.values.flat()) v /= peak;
  }
  return g;
}

double fraction_below(const HeatmapGrid& grid, double threshold) {
  const auto vals = grid.values.flat();
  const auto n = std::count_if(vals.begin(), vals.end(), [&](double v) { return v < threshold; });
  return static_cast<double>(n) / static_cast<double>(vals.size());
}

}  // namespace regmdp
