#include <immintrin.h>

#include <cmath>
#include <numbers>

#include "histoseg/simd.hpp"

namespace histoseg::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp(x) for x <= 0 to ~1 ulp: x = n ln2 + r, |r| <= ln2/2, degree-13 Taylor
// on r, then scale by 2^n through the exponent field. Arguments below the
// smallest normal result flush to zero.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d min_arg = _mm256_set1_pd(-708.39641853226408);
  const __m256d underflow = _mm256_cmp_pd(x, min_arg, _CMP_LT_OQ);
  x = _mm256_max_pd(x, min_arg);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(std::numbers::log2e)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
      1.0,                1.0};
  __m256d p = _mm256_set1_pd(kInvFact[0]);
  for (int k = 1; k < 14; ++k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[k]));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_add_epi64(_mm256_cvtepi32_epi64(n32), _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void complex_multiply(std::complex<double>* out, const std::complex<double>* a,
                      const std::complex<double>* b, std::size_t n) {
  auto* po = reinterpret_cast<double*>(out);
  const auto* pa = reinterpret_cast<const double*>(a);
  const auto* pb = reinterpret_cast<const double*>(b);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    const __m256d b_re = _mm256_movedup_pd(vb);
    const __m256d b_im = _mm256_permute_pd(vb, 0xF);
    const __m256d a_swap = _mm256_permute_pd(va, 0x5);
    _mm256_storeu_pd(po + 2 * i, _mm256_fmaddsub_pd(va, b_re, _mm256_mul_pd(a_swap, b_im)));
  }
  for (; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br - ai * bi, ar * bi + ai * br};
  }
}

MixtureSums mixture_sums(const double* centers, const double* weights, std::size_t n, double t,
                         double var) {
  const double scale = -0.5 / var;
  const __m256d vt = _mm256_set1_pd(t);
  const __m256d vscale = _mm256_set1_pd(scale);
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d z = _mm256_sub_pd(vt, _mm256_loadu_pd(centers + i));
    const __m256d z2 = _mm256_mul_pd(z, z);
    const __m256d wg = _mm256_mul_pd(_mm256_loadu_pd(weights + i), exp_nonpositive(_mm256_mul_pd(z2, vscale)));
    s0 = _mm256_add_pd(s0, wg);
    s1 = _mm256_fmadd_pd(wg, z, s1);
    s2 = _mm256_fmadd_pd(wg, z2, s2);
  }
  MixtureSums s{hsum(s0), hsum(s1), hsum(s2)};
  for (; i < n; ++i) {
    const double z = t - centers[i];
    const double wg = weights[i] * std::exp(z * z * scale);
    s.s0 += wg;
    s.s1 += wg * z;
    s.s2 += wg * z * z;
  }
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
  s.s0 *= norm;
  s.s1 *= norm;
  s.s2 *= norm;
  return s;
}

}  // namespace histoseg::simd::avx2
