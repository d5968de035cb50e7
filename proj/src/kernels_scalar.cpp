#include "kss/kernels.hpp"

#include <algorithm>
#include <cmath>

// Portable reference kernels. Reductions accumulate in blocks of 64 and then
// combine the block sums pairwise, which keeps rounding behaviour close to the
// 4-lane vector accumulators and makes long sums far more accurate than a
// naive running total.

namespace kss::kernels {
namespace {

constexpr std::size_t kBlock = 64;

void add_s(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_s(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_s(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void mul_add_s(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

void scale_s(double* dst, const double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * s;
}

void axpby_s(double* dst, double alpha, const double* x, double beta, const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = alpha * x[i] + beta * y[i];
}

void magnitude_sq2_s(double* dst, const double* x, const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] * x[i] + y[i] * y[i];
}

void magnitude_sq3_s(double* dst, const double* x, const double* y, const double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] * x[i] + y[i] * y[i] + z[i] * z[i];
}

void mode_scale_s(double* out, const double* in, const double* m, std::size_t nmodes) {
  for (std::size_t i = 0; i < nmodes; ++i) {
    out[2 * i] = m[i] * in[2 * i];
    out[2 * i + 1] = m[i] * in[2 * i + 1];
  }
}

void mode_blend_s(double* out, const double* e, const double* u, const double* w, const double* g,
                  std::size_t nmodes) {
  for (std::size_t i = 0; i < nmodes; ++i) {
    out[2 * i] = e[i] * u[2 * i] + w[i] * g[2 * i];
    out[2 * i + 1] = e[i] * u[2 * i + 1] + w[i] * g[2 * i + 1];
  }
}

// Multiply by i*k per mode: (re,im) -> (-k*im, k*re).
void mode_grad_s(double* out, const double* in, const double* k, std::size_t nmodes) {
  for (std::size_t i = 0; i < nmodes; ++i) {
    const double re = in[2 * i];
    const double im = in[2 * i + 1];
    out[2 * i] = -k[i] * im;
    out[2 * i + 1] = k[i] * re;
  }
}

// Leray projection per mode: v -= k (k.v)/|k|^2. inv_k2 is precomputed with
// the k=0 entry set to zero, which also zeroes the mean mode's correction.
void leray2_s(double* vx, double* vy, const double* kx, const double* ky, const double* inv_k2,
              std::size_t nmodes) {
  for (std::size_t i = 0; i < nmodes; ++i) {
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

void leray3_s(double* vx, double* vy, double* vz, const double* kx, const double* ky, const double* kz,
              const double* inv_k2, std::size_t nmodes) {
  for (std::size_t i = 0; i < nmodes; ++i) {
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

// Combine per-block partial sums pairwise.
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
      // Overflow of the fixed partial buffer: fold down pairwise first.
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

double sum_s(const double* a, std::size_t n) {
  return block_reduce(n, [a](std::size_t i, std::size_t len) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t j = i;
    for (; j + 4 <= i + len; j += 4) {
      s0 += a[j];
      s1 += a[j + 1];
      s2 += a[j + 2];
      s3 += a[j + 3];
    }
    for (; j < i + len; ++j) s0 += a[j];
    return (s0 + s1) + (s2 + s3);
  });
}

double dot_s(const double* a, const double* b, std::size_t n) {
  return block_reduce(n, [a, b](std::size_t i, std::size_t len) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t j = i;
    for (; j + 4 <= i + len; j += 4) {
      s0 += a[j] * b[j];
      s1 += a[j + 1] * b[j + 1];
      s2 += a[j + 2] * b[j + 2];
      s3 += a[j + 3] * b[j + 3];
    }
    for (; j < i + len; ++j) s0 += a[j] * b[j];
    return (s0 + s1) + (s2 + s3);
  });
}

double pow_int(double x, int p) {
  double r = 1.0;
  while (p > 0) {
    if (p & 1) r *= x;
    x *= x;
    p >>= 1;
  }
  return r;
}

double sum_abs_pow_int_s(const double* a, int p, std::size_t n) {
  return block_reduce(n, [a, p](std::size_t i, std::size_t len) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t j = i;
    for (; j + 4 <= i + len; j += 4) {
      s0 += pow_int(std::fabs(a[j]), p);
      s1 += pow_int(std::fabs(a[j + 1]), p);
      s2 += pow_int(std::fabs(a[j + 2]), p);
      s3 += pow_int(std::fabs(a[j + 3]), p);
    }
    for (; j < i + len; ++j) s0 += pow_int(std::fabs(a[j]), p);
    return (s0 + s1) + (s2 + s3);
  });
}

double max_abs_s(const double* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

double min_val_s(const double* a, std::size_t n) {
  if (n == 0) return 0.0;
  double m = a[0];
  for (std::size_t i = 1; i < n; ++i) m = std::min(m, a[i]);
  return m;
}

const Ops kScalar = {
    .name = "scalar",
    .add = add_s,
    .sub = sub_s,
    .mul = mul_s,
    .mul_add = mul_add_s,
    .scale = scale_s,
    .axpby = axpby_s,
    .magnitude_sq2 = magnitude_sq2_s,
    .magnitude_sq3 = magnitude_sq3_s,
    .mode_scale = mode_scale_s,
    .mode_blend = mode_blend_s,
    .mode_grad = mode_grad_s,
    .leray2 = leray2_s,
    .leray3 = leray3_s,
    .sum = sum_s,
    .dot = dot_s,
    .sum_abs_pow_int = sum_abs_pow_int_s,
    .max_abs = max_abs_s,
    .min_val = min_val_s,
};

}  // namespace

const Ops& scalar_ops() { return kScalar; }

double sum_abs_pow(const double* a, double p, std::size_t n) {
  const int pi = static_cast<int>(p);
  if (p == static_cast<double>(pi) && pi >= 1) return active().sum_abs_pow_int(a, pi, n);
  // Fractional exponent: plain scalar pow loop, blocked for accuracy.
  return block_reduce(n, [a, p](std::size_t i, std::size_t len) {
    double s = 0.0;
    for (std::size_t j = i; j < i + len; ++j) s += std::pow(std::fabs(a[j]), p);
    return s;
  });
}

}  // namespace kss::kernels
