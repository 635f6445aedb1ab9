#include <cstdlib>
#include <string>

#include "regmdp/error.hpp"
#include "regmdp/kernels.hpp"

namespace regmdp::kernels {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, scalar::dot, scalar::axpy, scalar::gemv,
                              scalar::bellman_backup};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2{Isa::Avx2, avx2::dot, avx2::axpy, avx2::gemv,
                            avx2::bellman_backup};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{Isa::Neon, neon::dot, neon::axpy, neon::gemv,
                            neon::bellman_backup};
#endif

const KernelTable& select() {
  if (const char* env = std::getenv("REGMDP_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa) && isa_available(isa)) return table(isa);
    }
  }
  if (isa_available(Isa::Avx2)) return table(Isa::Avx2);
  if (isa_available(Isa::Neon)) return table(Isa::Neon);
  return kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!isa_available(isa)) {
    throw ParameterError("kernel variant not available: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2: return kAvx2;
#endif
#if defined(__aarch64__)
    case Isa::Neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active() {
  static const KernelTable& selected = select();
  return selected;
}

}  // namespace regmdp::kernels
