#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "histoseg/kde.hpp"

namespace histoseg {

struct MinimaSet {
  std::vector<double> positions;  // strictly increasing
  double scale_offset = 0.0;
};

struct MinimaOptions {
  std::size_t grid_oversampling = 10;
  /// Bisection tolerance; <= 0 selects dt * 1e-6.
  double root_tol = 0.0;
};

/// Interior local minima of the model: sign changes of the first derivative
/// from negative to positive on a uniform scan grid over [c_0, c_{N-1}],
/// refined by bisection and kept when the second derivative is positive.
MinimaSet local_minima(const KdeModel& model, const MinimaOptions& options = {});

/// First derivative of the model at every scan-grid point
/// c_0 + k * dt / oversampling, k = 0 .. (N-1) * oversampling.
std::vector<double> scan_derivative(const KdeModel& model, std::size_t oversampling);

enum class Direction { None, Coarser, Finer };

const char* to_string(Direction d) noexcept;

struct ThresholdResult {
  std::vector<double> thresholds;
  double scale_offset = 0.0;
  Direction direction = Direction::None;
  std::size_t steps = 0;
  bool refined = false;
  /// Number of minima of the fitted model before any scale change.
  std::size_t base_minima = 0;
};

struct ScaleWalkRow {
  std::size_t step;
  double scale_offset;
  std::size_t minima_count;
};

struct DetectOptions {
  std::size_t max_steps = 10000;
  MinimaOptions minima{};
  /// Bisection on the scale axis stops at step / refine_divisor.
  double refine_divisor = 1024.0;
};

/// Walks the scale axis in increments of dsigma2_step (towards coarser
/// scales when there are too many minima, finer when too few) until the
/// model has exactly classes - 1 interior minima.
///
/// Throws UnresolvableClusters when the finer walk reaches a non-positive
/// variance, SearchLimit after max_steps steps, and CountUnreachable when a
/// step skips over the target count and bisection cannot land on it.
ThresholdResult detect_thresholds(const KdeModel& model, std::size_t classes, double dsigma2_step,
                                  const DetectOptions& options = {},
                                  std::vector<ScaleWalkRow>* trace = nullptr);

/// Writes `step,scale_offset,minima_count` rows.
void write_scale_trace(const std::vector<ScaleWalkRow>& trace, const std::filesystem::path& path);

}  // namespace histoseg
