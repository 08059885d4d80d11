#include "histoseg/numerics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "histoseg/errors.hpp"
#include "histoseg/simd.hpp"

namespace histoseg {

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FftPlan::FftPlan(std::size_t size) : size_(size) {
  if (size == 0 || (size & (size - 1)) != 0) {
    fail(ErrorKind::InvalidArgument, "FftPlan: size must be a power of two, got " + std::to_string(size));
  }
  twiddles_.resize(size / 2);
  for (std::size_t k = 0; k < size / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
  bitrev_.resize(size);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < size) ++bits;
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bitrev_[i] = r;
  }
}

void FftPlan::forward(std::span<std::complex<double>> data) const { transform(data, false); }

void FftPlan::inverse(std::span<std::complex<double>> data) const {
  transform(data, true);
  const double scale = 1.0 / static_cast<double>(size_);
  for (auto& x : data) x *= scale;
}

void FftPlan::transform(std::span<std::complex<double>> data, bool inverse) const {
  if (data.size() != size_) fail(ErrorKind::InvalidArgument, "FftPlan: buffer size mismatch");
  for (std::size_t i = 0; i < size_; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= size_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = size_ / len;
    for (std::size_t start = 0; start < size_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        std::complex<double> w = twiddles_[j * stride];
        if (inverse) w = std::conj(w);
        const std::complex<double> u = data[start + j];
        const std::complex<double> x = data[start + j + half];
        const std::complex<double> v{x.real() * w.real() - x.imag() * w.imag(),
                                     x.real() * w.imag() + x.imag() * w.real()};
        data[start + j] = u + v;
        data[start + j + half] = u - v;
      }
    }
  }
}

LinearConvolver::LinearConvolver(std::size_t n, std::size_t kernel_center)
    : n_(n), center_(kernel_center), plan_(next_pow2(n == 0 ? 1 : 2 * n - 1)) {
  if (n == 0) fail(ErrorKind::InvalidArgument, "LinearConvolver: empty sequence");
  if (kernel_center >= n) fail(ErrorKind::InvalidArgument, "LinearConvolver: kernel center out of range");
  work_.resize(plan_.size());
  product_.resize(plan_.size());
}

void LinearConvolver::load_real(std::span<const double> x, std::vector<std::complex<double>>& buf) const {
  buf.assign(plan_.size(), {0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = {x[i], 0.0};
}

std::vector<std::complex<double>> LinearConvolver::kernel_spectrum(std::span<const double> kernel) const {
  std::vector<std::complex<double>> out;
  load_real(kernel, out);
  plan_.forward(out);
  return out;
}

void LinearConvolver::kernel_spectra(std::span<const double> first, std::span<const double> second,
                                     std::vector<std::complex<double>>& first_out,
                                     std::vector<std::complex<double>>& second_out) const {
  const std::size_t p = plan_.size();
  work_.assign(p, {0.0, 0.0});
  for (std::size_t i = 0; i < first.size(); ++i) work_[i] = {first[i], second[i]};
  plan_.forward(work_);
  first_out.resize(p);
  second_out.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    const std::complex<double> z = work_[k];
    const std::complex<double> zc = std::conj(work_[(p - k) % p]);
    first_out[k] = 0.5 * (z + zc);
    second_out[k] = std::complex<double>(0.0, -0.5) * (z - zc);
  }
}

void LinearConvolver::convolve(std::span<const double> signal,
                               std::span<const std::complex<double>> kernel_hat,
                               std::span<double> out) const {
  load_real(signal, work_);
  plan_.forward(work_);
  simd::complex_multiply(work_, work_, kernel_hat);
  plan_.inverse(work_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = work_[i + center_].real();
}

void LinearConvolver::convolve2(std::span<const double> signal,
                                std::span<const std::complex<double>> first_hat,
                                std::span<const std::complex<double>> second_hat,
                                std::span<double> first_out, std::span<double> second_out) const {
  load_real(signal, work_);
  plan_.forward(work_);
  simd::complex_multiply(product_, work_, second_hat);
  simd::complex_multiply(work_, work_, first_hat);
  // Both products are spectra of real sequences, so one inverse transform
  // carries them in the real and imaginary parts.
  const std::complex<double> i_unit{0.0, 1.0};
  for (std::size_t k = 0; k < work_.size(); ++k) work_[k] += i_unit * product_[k];
  plan_.inverse(work_);
  for (std::size_t i = 0; i < n_; ++i) {
    first_out[i] = work_[i + center_].real();
    second_out[i] = work_[i + center_].imag();
  }
}

namespace {

void check_convolution_inputs(std::span<const double> signal, std::span<const double> kernel,
                              std::size_t kernel_center) {
  if (signal.size() != kernel.size()) {
    fail(ErrorKind::InvalidArgument, "linear_convolve: signal length " + std::to_string(signal.size()) +
                                         " != kernel length " + std::to_string(kernel.size()));
  }
  if (signal.empty()) fail(ErrorKind::InvalidArgument, "linear_convolve: empty input");
  if (kernel_center >= kernel.size()) fail(ErrorKind::InvalidArgument, "linear_convolve: kernel center out of range");
  for (std::size_t i = 0; i < signal.size(); ++i) {
    if (!std::isfinite(signal[i]) || !std::isfinite(kernel[i])) {
      fail(ErrorKind::InvalidArgument, "linear_convolve: non-finite value at index " + std::to_string(i));
    }
  }
}

}  // namespace

RealSequence linear_convolve(std::span<const double> signal, std::span<const double> kernel,
                             std::size_t kernel_center) {
  check_convolution_inputs(signal, kernel, kernel_center);
  LinearConvolver conv(signal.size(), kernel_center);
  const auto kernel_hat = conv.kernel_spectrum(kernel);
  RealSequence out(signal.size());
  conv.convolve(signal, kernel_hat, out);
  return out;
}

RealSequence direct_convolve(std::span<const double> signal, std::span<const double> kernel,
                             std::size_t kernel_center) {
  check_convolution_inputs(signal, kernel, kernel_center);
  const auto n = static_cast<std::ptrdiff_t>(signal.size());
  const auto c = static_cast<std::ptrdiff_t>(kernel_center);
  RealSequence out(signal.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const std::ptrdiff_t k = i - j + c;
      if (k >= 0 && k < n) acc += signal[j] * kernel[k];
    }
    out[i] = acc;
  }
  return out;
}

double refine_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "refine_root: tol must be positive");
  if (lo > hi) std::swap(lo, hi);
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi) || std::isnan(flo) || std::isnan(fhi)) {
    fail(ErrorKind::Bracket, "refine_root: no sign change on [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
  }
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if (std::signbit(fmid) == std::signbit(flo)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace histoseg
