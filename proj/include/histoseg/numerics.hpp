#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace histoseg {

using RealSequence = std::vector<double>;

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n) noexcept;

// In-place iterative radix-2 transform with precomputed twiddles and
// bit-reversal table. Plans are immutable after construction.
class FftPlan {
 public:
  explicit FftPlan(std::size_t size);

  std::size_t size() const noexcept { return size_; }

  void forward(std::span<std::complex<double>> data) const;
  /// Includes the 1/size normalization.
  void inverse(std::span<std::complex<double>> data) const;

 private:
  void transform(std::span<std::complex<double>> data, bool inverse) const;

  std::size_t size_;
  std::vector<std::complex<double>> twiddles_;
  std::vector<std::size_t> bitrev_;
};

// Reusable linear convolution of length-N signals against length-N kernels
// whose origin sits at `kernel_center`. Output sample i is
//   sum_j signal[j] * kernel[i - j + kernel_center]
// over valid kernel indices. Padding to >= 2N - 1 rules out wrap-around.
class LinearConvolver {
 public:
  LinearConvolver(std::size_t n, std::size_t kernel_center);

  std::size_t length() const noexcept { return n_; }
  std::size_t padded_length() const noexcept { return plan_.size(); }

  /// Spectrum of a kernel, reusable across calls.
  std::vector<std::complex<double>> kernel_spectrum(std::span<const double> kernel) const;
  /// Spectra of two kernels from one transform.
  void kernel_spectra(std::span<const double> first, std::span<const double> second,
                      std::vector<std::complex<double>>& first_out,
                      std::vector<std::complex<double>>& second_out) const;

  void convolve(std::span<const double> signal, std::span<const std::complex<double>> kernel_hat,
                std::span<double> out) const;
  /// Convolves one signal against two kernels (one forward, one inverse transform).
  void convolve2(std::span<const double> signal, std::span<const std::complex<double>> first_hat,
                 std::span<const std::complex<double>> second_hat, std::span<double> first_out,
                 std::span<double> second_out) const;

 private:
  void load_real(std::span<const double> x, std::vector<std::complex<double>>& buf) const;

  std::size_t n_;
  std::size_t center_;
  FftPlan plan_;
  mutable std::vector<std::complex<double>> work_;
  mutable std::vector<std::complex<double>> product_;
};

/// One-shot linear convolution; see LinearConvolver for the index convention.
/// Throws InvalidArgument on length mismatch, empty input, out-of-range
/// center or non-finite values.
RealSequence linear_convolve(std::span<const double> signal, std::span<const double> kernel,
                             std::size_t kernel_center);

/// Direct O(N^2) evaluation of the same convolution (reference path).
RealSequence direct_convolve(std::span<const double> signal, std::span<const double> kernel,
                             std::size_t kernel_center);

/// Bisection for a sign change of f on [lo, hi]. Stops once the bracket is
/// narrower than tol or after 200 halvings. An endpoint where f is exactly
/// zero is returned as is. Throws Bracket when f(lo) and f(hi) share a sign.
double refine_root(const std::function<double(double)>& f, double lo, double hi, double tol);

}  // namespace histoseg
