#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "histoseg/scalespace.hpp"

namespace histoseg {

// Three-component Cauchy mixture
//   F(t) = sum_j c_j / (pi b_j (1 + ((t - a_j)/b_j)^2)).
struct CauchyMixture {
  std::array<double, 3> a{};  // locations, ascending
  std::array<double, 3> b{};  // scales > 0
  std::array<double, 3> c{};  // weights, sum to 1

  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;
};

/// Locations U(-4, 4) sorted, scales U(0.5, 2), weights U(0.2, 0.5)
/// divided by their sum. Deterministic in the seed.
CauchyMixture sample_mixture(std::uint64_t seed);

double mixture_pdf(const CauchyMixture& m, double t);
/// c_j * Cauchy(t; a_j, b_j), j in {0, 1, 2}.
double component_pdf(const CauchyMixture& m, std::size_t j, double t);
double mixture_cdf(const CauchyMixture& m, double t);

/// Crossings of consecutive weighted components inside (a_k, a_{k+1}).
/// Throws DegenerateMixture when one component dominates the whole interval.
std::array<double, 2> reference_thresholds(const CauchyMixture& m);

std::vector<double> draw_samples(const CauchyMixture& m, std::size_t n, std::uint64_t seed);

struct GaussianComponent {
  double alpha;
  double mu;
  double sigma2;
};

// Ground-truth Gaussian mixture, means strictly increasing, alphas sum to 1.
struct GaussianMixtureTruth {
  std::vector<GaussianComponent> components;

  void validate() const;
  double pdf(double t) const;
  double weighted_component(std::size_t k, double t) const;
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;
};

/// Crossings alpha_k H_k = alpha_{k+1} H_{k+1} inside (mu_k, mu_{k+1}).
/// Throws DegenerateMixture when a pair does not cross there.
std::vector<double> gaussian_truth_thresholds(const GaussianMixtureTruth& g);

enum class MinimaClass { Exact, Over, Under };

const char* to_string(MinimaClass c) noexcept;

struct ValidationCase {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  CauchyMixture mixture;
  bool degenerate = false;
  bool failed = false;
  std::string failure;  // error class name when failed
  std::array<double, 2> reference{};
  std::array<double, 2> predicted{};
  std::array<double, 2> deviation{};
  std::size_t base_minima = 0;
  MinimaClass minima_class = MinimaClass::Exact;
  double scale_offset = 0.0;
  std::size_t em_iterations = 0;
  bool em_converged = false;
  double em_variance = 0.0;
};

struct ValidationSummary {
  std::size_t cases = 0;
  std::size_t degenerate = 0;
  std::size_t failed = 0;
  std::size_t evaluated = 0;
  std::size_t thresholds = 0;
  std::size_t deviating = 0;
  /// Fraction of thresholds with |pred - ref| > 1; failed cases count both
  /// of their thresholds as deviating.
  double deviation_fraction = 0.0;
  std::size_t over_resolved = 0;
  std::size_t under_resolved = 0;
  std::size_t exact = 0;
};

struct ValidationReport {
  std::size_t n_bins = 0;
  std::size_t samples_per_case = 0;
  double dsigma2 = 0.0;
  std::uint64_t seed = 0;
  std::vector<ValidationCase> cases;
  ValidationSummary summary;
};

struct ValidationConfig {
  std::size_t n_cases = 200;
  std::size_t n_bins = 1000;
  std::size_t samples_per_case = 10000;
  double dsigma2 = 0.01;
  std::uint64_t seed = 1;
  EmConfig em{};
  DetectOptions detect{};
  double lo = -15.0;
  double hi = 15.0;
  /// Worker threads; 0 reads HISTOSEG_THREADS (default: hardware concurrency).
  std::size_t threads = 0;
};

/// Seed of case i, derived from the run seed so that results do not depend
/// on evaluation order.
std::uint64_t case_seed(std::uint64_t seed, std::size_t index) noexcept;

ValidationCase run_case(const ValidationConfig& config, std::size_t index);
ValidationReport run_validation(const ValidationConfig& config);

/// Per-case rows as CSV.
void write_validation_csv(const ValidationReport& report, const std::filesystem::path& path);

}  // namespace histoseg
