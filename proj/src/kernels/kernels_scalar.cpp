#include "regmdp/kernels.hpp"

namespace regmdp::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(m + r * cols, x, cols);
}

void bellman_backup(const double* r, const double* p, std::size_t rows, std::size_t cols,
                    const double* v, double gamma, double* q) {
  for (std::size_t i = 0; i < rows; ++i) q[i] = r[i] + gamma * dot(p + i * cols, v, cols);
}

}  // namespace regmdp::kernels::scalar
