#include <cmath>
#include <numbers>

#include "histoseg/simd.hpp"

namespace histoseg::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void complex_multiply(std::complex<double>* out, const std::complex<double>* a,
                      const std::complex<double>* b, std::size_t n) {
  // Spelled out: operator* on std::complex goes through the C99 Annex G path.
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a[i].real(), ai = a[i].imag();
    const double br = b[i].real(), bi = b[i].imag();
    out[i] = {ar * br - ai * bi, ar * bi + ai * br};
  }
}

MixtureSums mixture_sums(const double* centers, const double* weights, std::size_t n, double t,
                         double var) {
  const double scale = -0.5 / var;
  MixtureSums s;
  for (std::size_t i = 0; i < n; ++i) {
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

}  // namespace histoseg::simd::scalar
