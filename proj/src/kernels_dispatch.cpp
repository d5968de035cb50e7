#include <cstdlib>
#include <string>

#include "kss/errors.hpp"
#include "kss/kernels.hpp"

// Runtime selection of the kernel table. Decided once, on first use:
//   1. KSS_KERNELS=scalar / KSS_KERNELS=avx2 forces a table (avx2 on an
//      unsupported CPU is an error rather than a silent fallback, so
//      equivalence tests can trust the override),
//   2. otherwise AVX2+FMA when the CPU has it, scalar everywhere else.

namespace kss::kernels {

namespace detail {
const Ops* avx2_table();  // defined in the AVX2-compiled translation unit
}

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& select() {
  const Ops* avx2 = cpu_has_avx2_fma() ? detail::avx2_table() : nullptr;
  if (const char* env = std::getenv("KSS_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return scalar_ops();
    if (want == "avx2") {
      if (!avx2) throw param_error("KSS_KERNELS=avx2 requested but AVX2+FMA kernels are unavailable on this CPU/build");
      return *avx2;
    }
    throw param_error("unknown KSS_KERNELS value '" + want + "' (expected 'scalar' or 'avx2')");
  }
  return avx2 ? *avx2 : scalar_ops();
}

}  // namespace

const Ops* avx2_ops() { return cpu_has_avx2_fma() ? detail::avx2_table() : nullptr; }

const Ops& active() {
  static const Ops& chosen = select();
  return chosen;
}

}  // namespace kss::kernels
