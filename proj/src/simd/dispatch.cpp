#include <atomic>
#include <cstdlib>
#include <cstring>

#include "histoseg/simd.hpp"

namespace histoseg::simd {

namespace {

constexpr KernelTable kScalar{&scalar::dot, &scalar::complex_multiply, &scalar::mixture_sums};
#if defined(HISTOSEG_WITH_AVX2)
constexpr KernelTable kAvx2{&avx2::dot, &avx2::complex_multiply, &avx2::mixture_sums};
#endif

Level initial_level() noexcept {
  const char* env = std::getenv("HISTOSEG_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Level::Scalar;
  return detected_level();
}

std::atomic<Level>& level_slot() noexcept {
  static std::atomic<Level> slot{initial_level()};
  return slot;
}

}  // namespace

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
  }
  return "unknown";
}

Level detected_level() noexcept {
#if defined(HISTOSEG_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Level::Avx2;
#endif
  return Level::Scalar;
}

Level active_level() noexcept { return level_slot().load(std::memory_order_relaxed); }

void set_active_level(Level level) noexcept {
  if (level == Level::Avx2 && detected_level() != Level::Avx2) level = Level::Scalar;
  level_slot().store(level, std::memory_order_relaxed);
}

const KernelTable& kernels(Level level) {
#if defined(HISTOSEG_WITH_AVX2)
  if (level == Level::Avx2 && detected_level() == Level::Avx2) return kAvx2;
#endif
  (void)level;
  return kScalar;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return kernels(active_level()).dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

void complex_multiply(std::span<std::complex<double>> out, std::span<const std::complex<double>> a,
                      std::span<const std::complex<double>> b) {
  kernels(active_level()).complex_multiply(out.data(), a.data(), b.data(), out.size());
}

MixtureSums mixture_sums(std::span<const double> centers, std::span<const double> weights, double t,
                         double var) {
  return kernels(active_level()).mixture_sums(centers.data(), weights.data(), centers.size(), t, var);
}

}  // namespace histoseg::simd
