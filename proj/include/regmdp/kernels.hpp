#pragma once

// Dense double-precision inner loops used by the Bellman backups.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2+FMA on x86-64, NEON on aarch64). The variant is selected once at
// first use from the CPU's capabilities; REGMDP_SIMD=scalar|avx2|neon
// overrides the choice. SIMD variants reassociate sums, so results agree with
// the scalar reference to rounding, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace regmdp::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = M x for row-major M (rows x cols)
  void (*gemv)(const double* m, std::size_t rows, std::size_t cols, const double* x,
               double* y);
  // q[i] = r[i] + gamma * sum_j p[i, j] v[j]  (p row-major, rows x cols)
  void (*bellman_backup)(const double* r, const double* p, std::size_t rows,
                         std::size_t cols, const double* v, double gamma, double* q);
};

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
void bellman_backup(const double* r, const double* p, std::size_t rows, std::size_t cols,
                    const double* v, double gamma, double* q);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
void bellman_backup(const double* r, const double* p, std::size_t rows, std::size_t cols,
                    const double* v, double gamma, double* q);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemv(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
void bellman_backup(const double* r, const double* p, std::size_t rows, std::size_t cols,
                    const double* v, double gamma, double* q);
}  // namespace neon
#endif

// True when the variant is compiled in and the running CPU supports it.
bool isa_available(Isa isa);

// Kernel table for a specific variant. Throws ParameterError if unavailable.
const KernelTable& table(Isa isa);

// The process-wide selected table.
const KernelTable& active();

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace regmdp::kernels
