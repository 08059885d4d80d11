#include "histoseg/scalespace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "histoseg/errors.hpp"
#include "histoseg/numerics.hpp"
#include "histoseg/simd.hpp"

namespace histoseg {

namespace {

// Beyond 40 standard deviations every Gaussian term underflows to zero, so
// truncating the kernel there leaves the sums unchanged.
constexpr double kKernelReach = 40.0;
constexpr double kMaxOversampling = 4096.0;

}  // namespace

const char* to_string(Direction d) noexcept {
  switch (d) {
    case Direction::None: return "none";
    case Direction::Coarser: return "coarser";
    case Direction::Finer: return "finer";
  }
  return "unknown";
}

std::vector<double> scan_derivative(const KdeModel& model, std::size_t oversampling) {
  if (oversampling == 0) fail(ErrorKind::InvalidArgument, "scan_derivative: oversampling must be positive");
  const std::size_t n = model.size();
  const double dt = model.dt();
  const double var = model.variance();
  const double sub = dt / static_cast<double>(oversampling);
  const double reach = std::ceil(kKernelReach * std::sqrt(var) / dt) + 1.0;
  const std::size_t half = std::min<std::size_t>(n - 1, reach > static_cast<double>(n) ? n : static_cast<std::size_t>(reach));
  const std::size_t width = 2 * half + 1;

  // Scan point j*oversampling + p sits at offset (j - i)*dt + p*sub from
  // center i, so each phase p is a correlation of the weights with one
  // sampled kernel.
  std::vector<double> padded(n + 2 * half, 0.0);
  std::copy(model.weights().begin(), model.weights().end(), padded.begin() + static_cast<std::ptrdiff_t>(half));

  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
  std::vector<double> kernel(width);
  std::vector<double> out((n - 1) * oversampling + 1);
  for (std::size_t p = 0; p < oversampling; ++p) {
    for (std::size_t m = 0; m < width; ++m) {
      const double d = static_cast<double>(static_cast<std::ptrdiff_t>(half) - static_cast<std::ptrdiff_t>(m));
      const double x = d * dt + static_cast<double>(p) * sub;
      kernel[m] = -(x / var) * norm * std::exp(-0.5 * x * x / var);
    }
    const std::size_t last = (p == 0) ? n : n - 1;
    for (std::size_t j = 0; j < last; ++j) {
      out[j * oversampling + p] = dt * simd::dot({padded.data() + j, width}, kernel);
    }
  }
  return out;
}

MinimaSet local_minima(const KdeModel& model, const MinimaOptions& options) {
  MinimaSet result;
  const std::size_t n = model.size();
  if (n < 2) return result;
  // Kernels narrower than a bin need a finer scan to see every bump.
  const double per_sigma = std::ceil(4.0 * model.dt() / std::sqrt(model.variance()));
  if (per_sigma > kMaxOversampling) {
    // Isolated spikes: one minimum between each pair of neighbouring nonzero
    // weights, where the model is flat at zero or dips between the bumps.
    std::ptrdiff_t last = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(model.weights()[i] > 0.0)) continue;
      if (last >= 0) {
        result.positions.push_back(0.5 * (model.centers()[static_cast<std::size_t>(last)] + model.centers()[i]));
      }
      last = static_cast<std::ptrdiff_t>(i);
    }
    return result;
  }
  const std::size_t m = std::max<std::size_t>(options.grid_oversampling == 0 ? 1 : options.grid_oversampling,
                                              static_cast<std::size_t>(std::min(per_sigma, kMaxOversampling)));
  const double tol = options.root_tol > 0.0 ? options.root_tol : model.dt() * 1e-6;
  const double x0 = model.centers().front();
  const double sub = model.dt() / static_cast<double>(m);
  const auto d1 = scan_derivative(model, m);
  const auto at = [&](std::size_t k) { return x0 + static_cast<double>(k) * sub; };
  const double x_last = at(d1.size() - 1);
  const auto f = [&](double t) { return derivative1(model, t); };

  std::ptrdiff_t prev = -1;
  for (std::size_t k = 0; k < d1.size(); ++k) {
    if (d1[k] == 0.0) continue;
    if (prev >= 0 && d1[static_cast<std::size_t>(prev)] < 0.0 && d1[k] > 0.0) {
      double lo = at(static_cast<std::size_t>(prev));
      double hi = at(k);
      const double mid = 0.5 * (lo + hi);
      // Underflowed gap between bumps: the model is flat at zero there, and the
      // pointwise sums may already be zero at the scan's last nonzero samples.
      if (k - static_cast<std::size_t>(prev) > 1 && evaluate(model, mid) == 0.0) {
        if (mid > x0 && mid < x_last) result.positions.push_back(mid);
        prev = static_cast<std::ptrdiff_t>(k);
        continue;
      }
      const double flo = f(lo);
      const double fhi = f(hi);
      // The scan and the pointwise derivative round differently; a bracket
      // whose ends disagree in sign only at round-off level is flat.
      if (flo < 0.0 && fhi > 0.0) {
        const double root = refine_root(f, lo, hi, tol);
        if (root > x0 && root < x_last) {
          if (derivative2(model, root) > 0.0 || evaluate(model, root) == 0.0) {
            result.positions.push_back(root);
          }
        }
      }
    }
    prev = static_cast<std::ptrdiff_t>(k);
  }
  return result;
}

namespace {

std::size_t count_at(const KdeModel& model, double offset, const MinimaOptions& options, MinimaSet& out) {
  out = local_minima(at_scale(model, offset), options);
  out.scale_offset = offset;
  return out.positions.size();
}

}  // namespace

ThresholdResult detect_thresholds(const KdeModel& model, std::size_t classes, double dsigma2_step,
                                  const DetectOptions& options, std::vector<ScaleWalkRow>* trace) {
  if (classes < 2) fail(ErrorKind::InvalidArgument, "detect_thresholds: need at least 2 classes");
  if (!(dsigma2_step > 0.0) || !std::isfinite(dsigma2_step)) {
    fail(ErrorKind::InvalidArgument, "detect_thresholds: scale step must be positive");
  }
  const std::size_t target = classes - 1;

  ThresholdResult result;
  MinimaSet minima;
  const std::size_t base = count_at(model, 0.0, options.minima, minima);
  result.base_minima = base;
  if (trace) trace->push_back({0, 0.0, base});
  if (base == target) {
    result.thresholds = std::move(minima.positions);
    return result;
  }

  const bool coarser = base > target;
  result.direction = coarser ? Direction::Coarser : Direction::Finer;
  const double sign = coarser ? 1.0 : -1.0;

  double prev_offset = 0.0;
  std::size_t prev_count = base;
  for (std::size_t k = 1; k <= options.max_steps; ++k) {
    const double offset = sign * static_cast<double>(k) * dsigma2_step;
    if (!(model.variance() + offset > 0.0)) {
      std::ostringstream msg;
      msg << "cannot reveal " << target << " minima: the finer walk reached zero variance at step " << k
          << " with " << prev_count << " minima";
      fail(ErrorKind::UnresolvableClusters, msg.str());
    }
    const std::size_t count = count_at(model, offset, options.minima, minima);
    if (trace) trace->push_back({k, offset, count});
    result.steps = k;
    if (count == target) {
      result.thresholds = std::move(minima.positions);
      result.scale_offset = offset;
      return result;
    }

    const bool prev_above = prev_count > target;
    const bool now_above = count > target;
    if (prev_above != now_above) {
      // The count jumped over the target between two steps.
      double near = prev_offset, far = offset;
      std::size_t near_count = prev_count, far_count = count;
      const double limit = dsigma2_step / options.refine_divisor;
      while (std::abs(far - near) > limit) {
        const double mid = 0.5 * (near + far);
        const std::size_t c = count_at(model, mid, options.minima, minima);
        if (c == target) {
          result.thresholds = std::move(minima.positions);
          result.scale_offset = mid;
          result.refined = true;
          return result;
        }
        if ((c > target) == prev_above) {
          near = mid;
          near_count = c;
        } else {
          far = mid;
          far_count = c;
        }
      }
      std::ostringstream msg;
      msg << "no scale yields exactly " << target << " minima: count goes from " << near_count << " at offset "
          << near << " to " << far_count << " at offset " << far;
      fail(ErrorKind::CountUnreachable, msg.str());
    }
    prev_offset = offset;
    prev_count = count;
  }
  fail(ErrorKind::SearchLimit,
       "scale walk did not reach " + std::to_string(target) + " minima within " + std::to_string(options.max_steps) + " steps");
}

void write_scale_trace(const std::vector<ScaleWalkRow>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "step,scale_offset,minima_count\n" << std::setprecision(17);
  for (const auto& row : trace) out << row.step << ',' << row.scale_offset << ',' << row.minima_count << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace histoseg
