#include <algorithm>
#include <cmath>
#include <random>

#include "regmdp/divergence.hpp"
#include "regmdp/error.hpp"

namespace regmdp {

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

void require_1d(const DiagGaussian& g) {
  if (g.dim() != 1) throw ParameterError("quadrature oracle needs a one-dimensional Gaussian");
}

struct Sample {
  double mean = 0.0;
  double std_error = 0.0;
};

// Mean and standard error of h(x) for x ~ g.
Sample mc_mean(const DiagGaussian& g, std::size_t n, std::mt19937_64& rng,
               const std::function<double(std::span<const double>)>& h) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(g.dim());
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < g.dim(); ++j) x[j] = g.mean[j] + g.stddev[j] * z(rng);
    const double v = h(x);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

void check_q(double q) {
  if (!(q >= 1.0) || !std::isfinite(q)) throw ParameterError("oracle requires q >= 1");
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int panels, int max_depth) {
  if (!(b > a)) return 0.0;
  panels = std::max(1, panels);
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * width;
    const double hi = (i + 1 == panels) ? b : lo + width;
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += simpson_step(f, lo, hi, flo, fm, fhi, whole, abs_tol / panels, max_depth);
  }
  return total;
}

OracleEstimate numeric_entropy_oracle(const DiagGaussian& g, double q, double k,
                                      const OracleMethod& method) {
  g.validate();
  check_q(q);
  if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
    std::mt19937_64 rng(mc->seed);
    const auto s = mc_mean(g, mc->n, rng, [&](std::span<const double> x) {
      const double lp = g.log_density(x);
      return q == 1.0 ? -k * lp : k * (1.0 - std::exp((q - 1.0) * lp)) / (q - 1.0);
    });
    return {s.mean, s.std_error};
  }
  require_1d(g);
  const double tol = std::get<Quadrature>(method).abs_tol;
  const double m = g.mean[0];
  const double sd = g.stddev[0];
  auto integrand = [&](double x) {
    const double lp = g.log_density(std::span<const double>(&x, 1));
    const double p = std::exp(lp);
    if (p == 0.0) return 0.0;
    return q == 1.0 ? -k * p * lp : k * (p - std::exp(q * lp)) / (q - 1.0);
  };
  return {adaptive_simpson(integrand, m - 12.0 * sd, m + 12.0 * sd, tol), std::nullopt};
}

OracleEstimate numeric_baseline_oracle(const DiagGaussian& g, double q, double k,
                                       const OracleMethod& method) {
  g.validate();
  check_q(q);
  // f'(p) - phi(p) = -k p^(q-1) for Tsallis, -k for Shannon.
  if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
    std::mt19937_64 rng(mc->seed);
    const auto s = mc_mean(g, mc->n, rng, [&](std::span<const double> x) {
      return q == 1.0 ? -k : -k * std::exp((q - 1.0) * g.log_density(x));
    });
    return {s.mean, s.std_error};
  }
  require_1d(g);
  const double tol = std::get<Quadrature>(method).abs_tol;
  const double m = g.mean[0];
  const double sd = g.stddev[0];
  auto integrand = [&](double x) {
    const double lp = g.log_density(std::span<const double>(&x, 1));
    return -k * std::exp(q * lp);
  };
  if (q == 1.0) return {-k, std::nullopt};
  return {adaptive_simpson(integrand, m - 12.0 * sd, m + 12.0 * sd, tol), std::nullopt};
}

OracleEstimate numeric_bregman_oracle(const DiagGaussian& p, const DiagGaussian& p_hat,
                                      double q, const OracleMethod& method) {
  p.validate();
  p_hat.validate();
  check_q(q);
  if (p.dim() != p_hat.dim()) throw ParameterError("Gaussians of different dimension");
  if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
    std::mt19937_64 rng(mc->seed);
    if (q == 1.0) {
      const auto s = mc_mean(p, mc->n, rng, [&](std::span<const double> x) {
        return p.log_density(x) - p_hat.log_density(x);
      });
      return {s.mean, s.std_error};
    }
    // D = E_p[(p^(q-1) - q p_hat^(q-1)) / (q-1)] + E_{p_hat}[p_hat^(q-1)],
    // the two expectations drawn from independent halves of the stream.
    const auto a = mc_mean(p, mc->n, rng, [&](std::span<const double> x) {
      return (std::exp((q - 1.0) * p.log_density(x)) -
              q * std::exp((q - 1.0) * p_hat.log_density(x))) /
             (q - 1.0);
    });
    const auto b = mc_mean(p_hat, mc->n, rng, [&](std::span<const double> x) {
      return std::exp((q - 1.0) * p_hat.log_density(x));
    });
    return {a.mean + b.mean, std::hypot(a.std_error, b.std_error)};
  }
  require_1d(p);
  const double tol = std::get<Quadrature>(method).abs_tol;
  const double lo = std::min(p.mean[0] - 12.0 * p.stddev[0], p_hat.mean[0] - 12.0 * p_hat.stddev[0]);
  const double hi = std::max(p.mean[0] + 12.0 * p.stddev[0], p_hat.mean[0] + 12.0 * p_hat.stddev[0]);
  // Pointwise nonnegative integrand of the Bregman divergence.
  auto integrand = [&](double x) {
    const std::span<const double> xs(&x, 1);
    const double lp = p.log_density(xs);
    const double lh = p_hat.log_density(xs);
    if (q == 1.0) {
      const double pv = std::exp(lp);
      return pv == 0.0 ? 0.0 : pv * (lp - lh);
    }
    return (std::exp(q * lp) - q * std::exp((q - 1.0) * lh + lp) +
            (q - 1.0) * std::exp(q * lh)) /
           (q - 1.0);
  };
  return {adaptive_simpson(integrand, lo, hi, tol), std::nullopt};
}

}  // namespace regmdp
