#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "histoseg/histogram.hpp"

namespace histoseg {

struct KMeansResult {
  std::vector<double> centroids;   // ascending
  std::vector<double> thresholds;  // midpoints between consecutive centroids
  std::size_t iterations = 0;
  /// sum_i h_i dt (t_i - centroid(i))^2
  double inertia = 0.0;
  std::vector<double> inertia_history;
};

struct KMeansOptions {
  std::size_t max_iterations = 500;
  double tol = 1e-10;
};

/// Lloyd's algorithm on bin centers weighted by h_i * dt, started from the
/// (j - 1/2)/C weighted quantiles. Throws InvalidArgument when fewer than C
/// bins carry mass.
KMeansResult kmeans_1d(const Histogram& hist, std::size_t classes, const KMeansOptions& options = {});

/// Weighted within-cluster sum of squares for an explicit bin-to-cluster
/// assignment (cluster means recomputed from the assignment).
double assignment_inertia(const Histogram& hist, const std::vector<std::size_t>& labels, std::size_t classes);

/// Lowest inertia over `restarts` random assignments of the occupied bins,
/// each polished by Lloyd iterations. Audit path for kmeans_1d.
double random_restart_inertia(const Histogram& hist, std::size_t classes, std::size_t restarts,
                              std::uint64_t seed);

}  // namespace histoseg
