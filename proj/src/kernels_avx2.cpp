#include "kss/kernels.hpp"

// AVX2+FMA kernel variants. This translation unit is the only one compiled
// with -mavx2 -mfma; the dispatcher (compiled for the baseline target) checks
// CPU features before handing out this table, so nothing here may run on a
// machine without AVX2.

#if (defined(__x86_64__) || defined(_M_X64)) && defined(__AVX2__) && defined(__FMA__)
#define KSS_KERNELS_AVX2 1
#include <immintrin.h>

#include <algorithm>
#include <cmath>
#endif

namespace kss::kernels::detail {

#ifdef KSS_KERNELS_AVX2
namespace {

constexpr std::size_t kBlock = 64;

void add_v(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_v(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_v(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void mul_add_v(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_loadu_pd(dst + i);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    _mm256_storeu_pd(dst + i, acc);
  }
  for (; i < n; ++i) dst[i] += a[i] * b[i];
}

void scale_v(double* dst, const double* a, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) dst[i] = a[i] * s;
}

void axpby_v(double* dst, double alpha, const double* x, double beta, const double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    t = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), t);
    _mm256_storeu_pd(dst + i, t);
  }
  for (; i < n; ++i) dst[i] = alpha * x[i] + beta * y[i];
}

void magnitude_sq2_v(double* dst, const double* x, const double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(vx, vx, _mm256_mul_pd(vy, vy)));
  }
  for (; i < n; ++i) dst[i] = x[i] * x[i] + y[i] * y[i];
}

void magnitude_sq3_v(double* dst, const double* x, const double* y, const double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vz = _mm256_loadu_pd(z + i);
    __m256d acc = _mm256_mul_pd(vz, vz);
    acc = _mm256_fmadd_pd(vy, vy, acc);
    acc = _mm256_fmadd_pd(vx, vx, acc);
    _mm256_storeu_pd(dst + i, acc);
  }
  for (; i < n; ++i) dst[i] = x[i] * x[i] + y[i] * y[i] + z[i] * z[i];
}

// One real multiplier per complex mode: duplicate each multiplier across the
// (re,im) pair with an in-lane unpack, two modes per 256-bit vector.
void mode_scale_v(double* out, const double* in, const double* m, std::size_t nmodes) {
  std::size_t i = 0;
  for (; i + 2 <= nmodes; i += 2) {
    const __m128d mm = _mm_loadu_pd(m + i);
    const __m256d md = _mm256_permute4x64_pd(_mm256_castpd128_pd256(mm), 0x50);  // m0 m0 m1 m1
    _mm256_storeu_pd(out + 2 * i, _mm256_mul_pd(md, _mm256_loadu_pd(in + 2 * i)));
  }
  for (; i < nmodes; ++i) {
    out[2 * i] = m[i] * in[2 * i];
    out[2 * i + 1] = m[i] * in[2 * i + 1];
  }
}

void mode_blend_v(double* out, const double* e, const double* u, const double* w, const double* g,
                  std::size_t nmodes) {
  std::size_t i = 0;
  for (; i + 2 <= nmodes; i += 2) {
    const __m256d ed = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(e + i)), 0x50);
    const __m256d wd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(w + i)), 0x50);
    __m256d acc = _mm256_mul_pd(wd, _mm256_loadu_pd(g + 2 * i));
    acc = _mm256_fmadd_pd(ed, _mm256_loadu_pd(u + 2 * i), acc);
    _mm256_storeu_pd(out + 2 * i, acc);
  }
  for (; i < nmodes; ++i) {
    out[2 * i] = e[i] * u[2 * i] + w[i] * g[2 * i];
    out[2 * i + 1] = e[i] * u[2 * i + 1] + w[i] * g[2 * i + 1];
  }
}

// out = (i*k).*in : swap (re,im) pairs in-lane, scale by k, negate the lanes
// that now hold the imaginary parts.
void mode_grad_v(double* out, const double* in, const double* k, std::size_t nmodes) {
  const __m256d sign = _mm256_set_pd(1.0, -1.0, 1.0, -1.0);  // lanes: -,+,-,+
  std::size_t i = 0;
  for (; i + 2 <= nmodes; i += 2) {
    const __m256d kd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(k + i)), 0x50);
    const __m256d swapped = _mm256_permute_pd(_mm256_loadu_pd(in + 2 * i), 0x5);  // im re im re
    _mm256_storeu_pd(out + 2 * i, _mm256_mul_pd(_mm256_mul_pd(kd, swapped), sign));
  }
  for (; i < nmodes; ++i) {
    const double re = in[2 * i];
    const double im = in[2 * i + 1];
    out[2 * i] = -k[i] * im;
    out[2 * i + 1] = k[i] * re;
  }
}

void leray2_v(double* vx, double* vy, const double* kx, const double* ky, const double* inv_k2,
              std::size_t nmodes) {
  std::size_t i = 0;
  for (; i + 2 <= nmodes; i += 2) {
    const __m256d kxd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(kx + i)), 0x50);
    const __m256d kyd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(ky + i)), 0x50);
    const __m256d ikd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(inv_k2 + i)), 0x50);
    const __m256d x = _mm256_loadu_pd(vx + 2 * i);
    const __m256d y = _mm256_loadu_pd(vy + 2 * i);
    __m256d div = _mm256_mul_pd(kyd, y);
    div = _mm256_fmadd_pd(kxd, x, div);          // (k.v) per re/im slot
    const __m256d c = _mm256_mul_pd(div, ikd);   // (k.v)/|k|^2
    _mm256_storeu_pd(vx + 2 * i, _mm256_fnmadd_pd(kxd, c, x));
    _mm256_storeu_pd(vy + 2 * i, _mm256_fnmadd_pd(kyd, c, y));
  }
  for (; i < nmodes; ++i) {
    const double re = kx[i] * vx[2 * i] + ky[i] * vy[2 * i];
    const double im = kx[i] * vx[2 * i + 1] + ky[i] * vy[2 * i + 1];
    const double cre = re * inv_k2[i];
    const double cim = im * inv_k2[i];
    vx[2 * i] -= kx[i] * cre;
    vx[2 * i + 1] -= kx[i] * cim;
    vy[2 * i] -= ky[i] * cre;
    vy[2 * i + 1] -= ky[i] * cim;
  }
}

void leray3_v(double* vx, double* vy, double* vz, const double* kx, const double* ky, const double* kz,
              const double* inv_k2, std::size_t nmodes) {
  std::size_t i = 0;
  for (; i + 2 <= nmodes; i += 2) {
    const __m256d kxd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(kx + i)), 0x50);
    const __m256d kyd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(ky + i)), 0x50);
    const __m256d kzd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(kz + i)), 0x50);
    const __m256d ikd = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(inv_k2 + i)), 0x50);
    const __m256d x = _mm256_loadu_pd(vx + 2 * i);
    const __m256d y = _mm256_loadu_pd(vy + 2 * i);
    const __m256d z = _mm256_loadu_pd(vz + 2 * i);
    __m256d div = _mm256_mul_pd(kzd, z);
    div = _mm256_fmadd_pd(kyd, y, div);
    div = _mm256_fmadd_pd(kxd, x, div);
    const __m256d c = _mm256_mul_pd(div, ikd);
    _mm256_storeu_pd(vx + 2 * i, _mm256_fnmadd_pd(kxd, c, x));
    _mm256_storeu_pd(vy + 2 * i, _mm256_fnmadd_pd(kyd, c, y));
    _mm256_storeu_pd(vz + 2 * i, _mm256_fnmadd_pd(kzd, c, z));
  }
  for (; i < nmodes; ++i) {
    const double re = kx[i] * vx[2 * i] + ky[i] * vy[2 * i] + kz[i] * vz[2 * i];
    const double im = kx[i] * vx[2 * i + 1] + ky[i] * vy[2 * i + 1] + kz[i] * vz[2 * i + 1];
    const double cre = re * inv_k2[i];
    const double cim = im * inv_k2[i];
    vx[2 * i] -= kx[i] * cre;
    vx[2 * i + 1] -= kx[i] * cim;
    vy[2 * i] -= ky[i] * cre;
    vy[2 * i + 1] -= ky[i] * cim;
    vz[2 * i] -= kz[i] * cre;
    vz[2 * i + 1] -= kz[i] * cim;
  }
}

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Same blockwise-pairwise reduction shape as the scalar table so the two
// implementations agree to a few ulps even on multi-million-point sums.
double combine(double* part, std::size_t m) {
  while (m > 1) {
    std::size_t h = (m + 1) / 2;
    for (std::size_t i = 0; i < m / 2; ++i) part[i] = part[2 * i] + part[2 * i + 1];
    if (m & 1) part[m / 2] = part[m - 1];
    m = h;
  }
  return m ? part[0] : 0.0;
}

template <class F>
double block_reduce(std::size_t n, F&& block_sum) {
  double part[256];
  std::size_t m = 0;
  double carry = 0.0;
  bool have_carry = false;
  for (std::size_t i = 0; i < n; i += kBlock) {
    const std::size_t len = std::min(kBlock, n - i);
    double s = block_sum(i, len);
    if (m == 256) {
      double folded = combine(part, m);
      carry = have_carry ? carry + folded : folded;
      have_carry = true;
      m = 0;
    }
    part[m++] = s;
  }
  double total = combine(part, m);
  return have_carry ? carry + total : total;
}

double sum_v(const double* a, std::size_t n) {
  return block_reduce(n, [a](std::size_t i, std::size_t len) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t j = i;
    for (; j + 8 <= i + len; j += 8) {
      s0 = _mm256_add_pd(s0, _mm256_loadu_pd(a + j));
      s1 = _mm256_add_pd(s1, _mm256_loadu_pd(a + j + 4));
    }
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; j < i + len; ++j) s += a[j];
    return s;
  });
}

double dot_v(const double* a, const double* b, std::size_t n) {
  return block_reduce(n, [a, b](std::size_t i, std::size_t len) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t j = i;
    for (; j + 8 <= i + len; j += 8) {
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j), s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + j + 4), _mm256_loadu_pd(b + j + 4), s1);
    }
    double s = hsum(_mm256_add_pd(s0, s1));
    for (; j < i + len; ++j) s += a[j] * b[j];
    return s;
  });
}

// |x|^p by repeated squaring with a uniform integer exponent.
__m256d pow_int_v(__m256d x, int p) {
  __m256d r = _mm256_set1_pd(1.0);
  while (p > 0) {
    if (p & 1) r = _mm256_mul_pd(r, x);
    x = _mm256_mul_pd(x, x);
    p >>= 1;
  }
  return r;
}

double pow_int_s(double x, int p) {
  double r = 1.0;
  while (p > 0) {
    if (p & 1) r *= x;
    x *= x;
    p >>= 1;
  }
  return r;
}

double sum_abs_pow_int_v(const double* a, int p, std::size_t n) {
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return block_reduce(n, [a, p, absmask](std::size_t i, std::size_t len) {
    __m256d s0 = _mm256_setzero_pd();
    std::size_t j = i;
    for (; j + 4 <= i + len; j += 4) {
      const __m256d x = _mm256_and_pd(absmask, _mm256_loadu_pd(a + j));
      s0 = _mm256_add_pd(s0, pow_int_v(x, p));
    }
    double s = hsum(s0);
    for (; j < i + len; ++j) s += pow_int_s(std::fabs(a[j]), p);
    return s;
  });
}

double max_abs_v(const double* a, std::size_t n) {
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d vm = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_and_pd(absmask, _mm256_loadu_pd(a + i)));
  const __m128d lo = _mm256_castpd256_pd128(vm);
  const __m128d hi = _mm256_extractf128_pd(vm, 1);
  const __m128d mx = _mm_max_pd(lo, hi);
  double m = _mm_cvtsd_f64(_mm_max_sd(mx, _mm_unpackhi_pd(mx, mx)));
  for (; i < n; ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

double min_val_v(const double* a, std::size_t n) {
  if (n == 0) return 0.0;
  std::size_t i = 0;
  double m = a[0];
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(a);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_min_pd(vm, _mm256_loadu_pd(a + i));
    const __m128d lo = _mm256_castpd256_pd128(vm);
    const __m128d hi = _mm256_extractf128_pd(vm, 1);
    const __m128d mn = _mm_min_pd(lo, hi);
    m = _mm_cvtsd_f64(_mm_min_sd(mn, _mm_unpackhi_pd(mn, mn)));
  }
  for (; i < n; ++i) m = std::min(m, a[i]);
  return m;
}

const Ops kAvx2 = {
    .name = "avx2",
    .add = add_v,
    .sub = sub_v,
    .mul = mul_v,
    .mul_add = mul_add_v,
    .scale = scale_v,
    .axpby = axpby_v,
    .magnitude_sq2 = magnitude_sq2_v,
    .magnitude_sq3 = magnitude_sq3_v,
    .mode_scale = mode_scale_v,
    .mode_blend = mode_blend_v,
    .mode_grad = mode_grad_v,
    .leray2 = leray2_v,
    .leray3 = leray3_v,
    .sum = sum_v,
    .dot = dot_v,
    .sum_abs_pow_int = sum_abs_pow_int_v,
    .max_abs = max_abs_v,
    .min_val = min_val_v,
};

}  // namespace
#endif  // KSS_KERNELS_AVX2

// The dispatcher queries this after its own CPU-feature check; it only
// returns a pointer, so it is safe to call on any machine.
const Ops* avx2_table() {
#ifdef KSS_KERNELS_AVX2
  return &kAvx2;
#else
  return nullptr;
#endif
}

}  // namespace kss::kernels::detail
