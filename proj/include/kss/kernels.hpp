#pragma once

#include <cstddef>

// Data-parallel inner loops behind the field and spectral layers.
//
// Every kernel exists in a portable scalar reference version and, on x86-64,
// an AVX2+FMA version compiled in a separate translation unit. The active
// table is picked once at startup from CPU features; the KSS_KERNELS
// environment variable ("scalar" or "avx2") overrides the choice.
//
// Complex spectral arrays are interleaved (re,im) doubles; mode multipliers
// are one real value per complex mode. Reductions use blockwise pairwise
// accumulation in both implementations so the two tables agree to a few ulps.

namespace kss::kernels {

struct Ops {
  const char* name;

  // pointwise
  void (*add)(double* dst, const double* a, const double* b, std::size_t n);
  void (*sub)(double* dst, const double* a, const double* b, std::size_t n);
  void (*mul)(double* dst, const double* a, const double* b, std::size_t n);
  void (*mul_add)(double* dst, const double* a, const double* b, std::size_t n);  // dst += a*b
  void (*scale)(double* dst, const double* a, double s, std::size_t n);
  void (*axpby)(double* dst, double alpha, const double* x, double beta, const double* y, std::size_t n);
  void (*magnitude_sq2)(double* dst, const double* x, const double* y, std::size_t n);
  void (*magnitude_sq3)(double* dst, const double* x, const double* y, const double* z, std::size_t n);

  // spectral mode ops (cplx = interleaved, m/e/w/k = one real per mode)
  void (*mode_scale)(double* out, const double* in, const double* m, std::size_t nmodes);  // out = m.*in
  void (*mode_blend)(double* out, const double* e, const double* u, const double* w, const double* g,
                     std::size_t nmodes);  // out = e.*u + w.*g
  void (*mode_grad)(double* out, const double* in, const double* k, std::size_t nmodes);  // out = (i*k).*in
  void (*leray2)(double* vx, double* vy, const double* kx, const double* ky, const double* inv_k2,
                 std::size_t nmodes);
  void (*leray3)(double* vx, double* vy, double* vz, const double* kx, const double* ky, const double* kz,
                 const double* inv_k2, std::size_t nmodes);

  // reductions
  double (*sum)(const double* a, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_abs_pow_int)(const double* a, int p, std::size_t n);  // sum |a|^p, integer p >= 1
  double (*max_abs)(const double* a, std::size_t n);
  double (*min_val)(const double* a, std::size_t n);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when not compiled in or CPU lacks AVX2/FMA
const Ops& active();

// sum |a|^p for real p >= 1. Integer p goes through the active table;
// fractional p always uses the scalar pow loop (no vector pow).
double sum_abs_pow(const double* a, double p, std::size_t n);

}  // namespace kss::kernels
