#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace histoseg {

// Uniform-bin density histogram on [lo, hi): bin i covers
// [lo + i*dt, lo + (i+1)*dt) and is represented by its center. Densities are
// scaled so that dt * sum(h) == 1.
class Histogram {
 public:
  Histogram() = default;

  /// Validates and normalizes raw non-negative counts. Throws EmptyHistogram
  /// when all counts are zero and InvalidArgument on bad ranges or values.
  static Histogram from_counts(std::span<const double> counts, double lo, double hi);

  std::size_t size() const noexcept { return h_.size(); }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return lo_ + dt_ * static_cast<double>(h_.size()); }
  double dt() const noexcept { return dt_; }
  double center(std::size_t i) const noexcept { return lo_ + (static_cast<double>(i) + 0.5) * dt_; }

  std::span<const double> density() const noexcept { return h_; }
  std::vector<double> centers() const;

  /// Bin index for a value, or size() when outside [lo, hi).
  std::size_t bin_of(double x) const noexcept;

 private:
  double lo_ = 0.0;
  double dt_ = 1.0;
  std::vector<double> h_;
};

/// Bins samples on n_bins uniform bins over [lo, hi); out-of-range samples are
/// discarded. Throws EmptyHistogram if nothing is kept.
Histogram from_samples(std::span<const double> samples, double lo, double hi, std::size_t n_bins);

/// h_i = raw_i / (dt * sum(raw)).
Histogram normalize(std::span<const double> raw_counts, double lo, double hi);

using WarningSink = std::function<void(const std::string&)>;

/// Two-column `t,h` CSV with a header row. Values are written with 17
/// significant digits.
void write_csv(const Histogram& hist, const std::filesystem::path& path);

/// Reads a `t,h` CSV. Spacing must be uniform within 1e-6 relative and h
/// non-negative (Format error otherwise). Mass off by more than 1e-6 is
/// renormalized and reported through `warn`.
Histogram read_csv(const std::filesystem::path& path, const WarningSink& warn = {});

}  // namespace histoseg
