#pragma once

// Bregman divergences between action distributions and between diagonal
// Gaussians under Tsallis entropy, plus numeric oracles for the Gaussian
// closed forms.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "regmdp/matrix.hpp"
#include "regmdp/mdp.hpp"
#include "regmdp/regularizer.hpp"

namespace regmdp {

// D(p1 || p2) = lambda * (E_{p1}[f'(p2) - phi(p1)] - E_{p2}[f'(p2) - phi(p2)]).
// DomainError under Shannon when p2(a) = 0 < p1(a).
double bregman_discrete(std::span<const double> p1, std::span<const double> p2,
                        const RegularizerSpec& spec);

// Mean of bregman_discrete(policy(s) || expert(s)) over the listed states.
double mean_bregman(const TabularPolicy& policy, const TabularPolicy& expert,
                    std::span<const std::size_t> states, const RegularizerSpec& spec);

struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t dim() const { return mean.size(); }
  double log_density(std::span<const double> x) const;
  double density(std::span<const double> x) const;
  // Throws ParameterError on mismatched lengths, non-finite means or stddev <= 0.
  void validate() const;
};

DiagGaussian gaussian_1d(double mean, double stddev);

// Tsallis entropy k * (1 - int p^q) / (q - 1); q = 1 gives k times the
// differential entropy.
double gaussian_tsallis_entropy(const DiagGaussian& g, double q, double k = 1.0);

// (q - 1) * T_q^k - k.
double gaussian_reward_baseline(const DiagGaussian& g, double q, double k = 1.0);

// Bregman divergence of the negative Tsallis entropy (k = 1). q = 1 is the KL
// divergence.
double gaussian_bregman_tsallis(const DiagGaussian& p, const DiagGaussian& p_hat, double q);

double gaussian_kl(const DiagGaussian& p, const DiagGaussian& p_hat);

struct MonteCarlo {
  std::size_t n = 1'000'000;
  std::uint64_t seed = 1;
};
struct Quadrature {
  double abs_tol = 1e-10;
};
using OracleMethod = std::variant<MonteCarlo, Quadrature>;

struct OracleEstimate {
  double value = 0.0;
  std::optional<double> std_error;  // Monte Carlo only
};

// Independent numeric estimates of the three Gaussian quantities above.
// Quadrature requires a one-dimensional Gaussian.
OracleEstimate numeric_entropy_oracle(const DiagGaussian& g, double q, double k,
                                      const OracleMethod& method);
OracleEstimate numeric_baseline_oracle(const DiagGaussian& g, double q, double k,
                                       const OracleMethod& method);
OracleEstimate numeric_bregman_oracle(const DiagGaussian& p, const DiagGaussian& p_hat,
                                      double q, const OracleMethod& method);

struct HeatmapGrid {
  std::vector<double> mu;         // axis values, rows
  std::vector<double> log_sigma;  // axis values, columns
  Matrix raw;                     // divergence before normalization
  Matrix values;                  // raw / max(raw)
};

// Divergence of N(mu, exp(log_sigma)^2) from a 1-d expert over the grid.
HeatmapGrid heatmap_grid(const DiagGaussian& expert, double mu_lo, double mu_hi,
                         double log_sigma_lo, double log_sigma_hi, std::size_t n_mu,
                         std::size_t n_log_sigma, double q);

// Fraction of cells with normalized value strictly below threshold.
double fraction_below(const HeatmapGrid& grid, double threshold);

// Adaptive Simpson quadrature of f on [a, b] seeded with `panels` equal panels.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int panels = 64, int max_depth = 50);

}  // namespace regmdp
