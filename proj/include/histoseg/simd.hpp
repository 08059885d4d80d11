#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops. Every kernel has a portable scalar reference
// implementation; vector variants are selected once at runtime from the CPU
// feature set and must agree with the reference to rounding.
namespace histoseg::simd {

enum class Level { Scalar, Avx2 };

std::string_view to_string(Level level) noexcept;

/// Best level the running CPU and this build both support.
Level detected_level() noexcept;

/// Level used by the dispatching entry points below. Defaults to
/// detected_level() unless HISTOSEG_SIMD=scalar is set in the environment.
Level active_level() noexcept;

/// Force a level (tests). Requests above detected_level() are clamped.
void set_active_level(Level level) noexcept;

// Sums of a shared-variance Gaussian mixture at one point t:
//   s0 = sum_i w_i g_i,  s1 = sum_i w_i g_i z_i,  s2 = sum_i w_i g_i z_i^2
// with z_i = t - c_i and g_i = N(z_i; 0, var).
struct MixtureSums {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
};

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*complex_multiply)(std::complex<double>* out, const std::complex<double>* a,
                           const std::complex<double>* b, std::size_t n);
  MixtureSums (*mixture_sums)(const double* centers, const double* weights, std::size_t n,
                              double t, double var);
};

const KernelTable& kernels(Level level);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void complex_multiply(std::complex<double>* out, const std::complex<double>* a,
                      const std::complex<double>* b, std::size_t n);
MixtureSums mixture_sums(const double* centers, const double* weights, std::size_t n, double t,
                         double var);
}  // namespace scalar

#if defined(HISTOSEG_WITH_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void complex_multiply(std::complex<double>* out, const std::complex<double>* a,
                      const std::complex<double>* b, std::size_t n);
MixtureSums mixture_sums(const double* centers, const double* weights, std::size_t n, double t,
                         double var);
}  // namespace avx2
#endif

// Dispatching wrappers over the active level.
double dot(std::span<const double> a, std::span<const double> b);
void complex_multiply(std::span<std::complex<double>> out, std::span<const std::complex<double>> a,
                      std::span<const std::complex<double>> b);
MixtureSums mixture_sums(std::span<const double> centers, std::span<const double> weights, double t,
                         double var);

}  // namespace histoseg::simd
