#include "histoseg/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "histoseg/errors.hpp"

namespace histoseg {

namespace {

std::size_t nearest(const std::vector<double>& centroids, double t) {
  std::size_t best = 0;
  double best_d = std::abs(t - centroids[0]);
  for (std::size_t k = 1; k < centroids.size(); ++k) {
    const double d = std::abs(t - centroids[k]);
    if (d < best_d) {
      best = k;
      best_d = d;
    }
  }
  return best;
}

struct Lloyd {
  std::vector<double> centroids;
  std::size_t iterations = 0;
  double inertia = 0.0;
  std::vector<double> history;
};

Lloyd run_lloyd(const Histogram& hist, std::vector<double> centroids, const KMeansOptions& options) {
  const auto h = hist.density();
  const double dt = hist.dt();
  const std::size_t k_count = centroids.size();
  Lloyd out;
  std::vector<double> sum_w(k_count), sum_wt(k_count);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    std::fill(sum_w.begin(), sum_w.end(), 0.0);
    std::fill(sum_wt.begin(), sum_wt.end(), 0.0);
    double inertia = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (h[i] <= 0.0) continue;
      const double t = hist.center(i);
      const std::size_t k = nearest(centroids, t);
      const double w = h[i] * dt;
      sum_w[k] += w;
      sum_wt[k] += w * t;
      inertia += w * (t - centroids[k]) * (t - centroids[k]);
    }
    out.history.push_back(inertia);
    double moved = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      if (sum_w[k] <= 0.0) continue;  // empty cluster keeps its centroid
      const double next = sum_wt[k] / sum_w[k];
      moved = std::max(moved, std::abs(next - centroids[k]));
      centroids[k] = next;
    }
    out.iterations = it + 1;
    if (moved < options.tol) break;
  }
  double inertia = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] <= 0.0) continue;
    const double t = hist.center(i);
    const double c = centroids[nearest(centroids, t)];
    inertia += h[i] * dt * (t - c) * (t - c);
  }
  out.inertia = inertia;
  out.centroids = std::move(centroids);
  return out;
}

std::size_t occupied_bins(const Histogram& hist) {
  std::size_t n = 0;
  for (double v : hist.density()) n += v > 0.0 ? 1 : 0;
  return n;
}

}  // namespace

KMeansResult kmeans_1d(const Histogram& hist, std::size_t classes, const KMeansOptions& options) {
  if (classes < 2) fail(ErrorKind::InvalidArgument, "kmeans_1d: need at least 2 classes");
  if (occupied_bins(hist) < classes) {
    fail(ErrorKind::InvalidArgument, "kmeans_1d: fewer bins with mass than classes");
  }
  const auto h = hist.density();
  const double dt = hist.dt();

  // Weighted quantile initialization.
  std::vector<double> centroids;
  double cumulative = 0.0;
  std::size_t i = 0;
  for (std::size_t j = 0; j < classes; ++j) {
    const double q = (static_cast<double>(j) + 0.5) / static_cast<double>(classes);
    while (i < h.size() && cumulative + h[i] * dt < q) {
      cumulative += h[i] * dt;
      ++i;
    }
    centroids.push_back(hist.center(std::min(i, h.size() - 1)));
  }

  auto lloyd = run_lloyd(hist, std::move(centroids), options);
  std::sort(lloyd.centroids.begin(), lloyd.centroids.end());

  KMeansResult result;
  result.centroids = lloyd.centroids;
  for (std::size_t k = 0; k + 1 < result.centroids.size(); ++k) {
    result.thresholds.push_back(0.5 * (result.centroids[k] + result.centroids[k + 1]));
  }
  result.iterations = lloyd.iterations;
  result.inertia = lloyd.inertia;
  result.inertia_history = std::move(lloyd.history);
  return result;
}

double assignment_inertia(const Histogram& hist, const std::vector<std::size_t>& labels, std::size_t classes) {
  const auto h = hist.density();
  const double dt = hist.dt();
  std::vector<double> sum_w(classes, 0.0), sum_wt(classes, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    sum_w[labels[i]] += h[i] * dt;
    sum_wt[labels[i]] += h[i] * dt * hist.center(i);
  }
  double inertia = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] <= 0.0) continue;
    const double mean = sum_wt[labels[i]] / sum_w[labels[i]];
    inertia += h[i] * dt * (hist.center(i) - mean) * (hist.center(i) - mean);
  }
  return inertia;
}

double random_restart_inertia(const Histogram& hist, std::size_t classes, std::size_t restarts,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> occupied;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    if (hist.density()[i] > 0.0) occupied.push_back(i);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<std::size_t> pick(occupied);
    std::shuffle(pick.begin(), pick.end(), rng);
    std::vector<double> centroids;
    for (std::size_t k = 0; k < classes && k < pick.size(); ++k) centroids.push_back(hist.center(pick[k]));
    best = std::min(best, run_lloyd(hist, std::move(centroids), {}).inertia);
  }
  return best;
}

}  // namespace histoseg
