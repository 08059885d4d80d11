#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "histoseg/histogram.hpp"
#include "histoseg/kde.hpp"
#include "histoseg/scalespace.hpp"

namespace histoseg {

// Grayscale image stack; samples are stored widened to 16 bits.
struct ImageStack {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint16_t maxval = 255;
  std::vector<std::vector<std::uint16_t>> slices;  // row-major, width * height each

  std::size_t pixel_count() const noexcept { return slices.size() * width * height; }
};

/// Binary PGM (P5). 16-bit samples are big-endian.
ImageStack read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height, std::uint16_t maxval,
               const std::vector<std::uint16_t>& pixels);

/// Loads slices in the given order; all must share dimensions and maxval.
ImageStack load_stack(const std::vector<std::filesystem::path>& paths);
/// Writes slice_0000.pgm, slice_0001.pgm, ... and returns the paths.
std::vector<std::filesystem::path> write_stack(const ImageStack& stack, const std::filesystem::path& dir);

/// min(1024, maxval + 1): one bin per gray level for 8- and 10-bit data, so
/// integer intensities never fall unevenly across bins.
std::size_t default_bins(std::uint16_t maxval) noexcept;

/// Integer pixel counts per bin over [0, maxval + 1).
std::vector<std::uint64_t> stack_counts(const ImageStack& stack, std::size_t n_bins);
Histogram combined_histogram(const ImageStack& stack, std::size_t n_bins);

struct ReferencePoints {
  double t_void;
  double t_solid;
};

/// Weighted mean intensity of bins below tau1 (void) and above tau2 (solid).
/// Throws EmptyCluster when either side has no mass.
ReferencePoints reference_points(const Histogram& hist, double tau1, double tau2);

/// (t - t_s) / (t_v - t_s) clamped to [0, 1]. Throws DegenerateReferences
/// when t_v == t_s.
double porosity_of_intensity(double t, double t_void, double t_solid);

/// First moment of the porosity histogram: dt * sum_i h_i phi(t_i).
double mean_porosity(const Histogram& hist, double t_void, double t_solid);

/// Porosity histogram: probability mass per porosity bin on [0, 1].
std::vector<double> porosity_histogram(const Histogram& hist, double t_void, double t_solid, std::size_t n_bins);

enum class PorosityMethod { KdeScaleSpace, KMeans };

const char* to_string(PorosityMethod m) noexcept;

struct PorosityReport {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double t_void = 0.0;
  double t_solid = 0.0;
  double mean_porosity = 0.0;
  PorosityMethod method = PorosityMethod::KdeScaleSpace;
  std::vector<double> porosity_hist;
  /// Threshold search details (kde method only).
  ThresholdResult search;
  std::size_t em_iterations = 0;
  bool em_converged = false;
  double em_variance = 0.0;
};

struct PorosityConfig {
  /// Histogram bins; 0 selects default_bins(maxval).
  std::size_t n_bins = 0;
  double dsigma2 = 0.01;
  EmConfig em{};
  DetectOptions detect{};
  std::size_t porosity_bins = 100;
};

/// Thresholds with the chosen method (3 classes), then reference points and
/// mean porosity. For stacks deeper than 8 bits the threshold search runs
/// on intensities rescaled to [0, 256).
PorosityReport estimate_porosity(const Histogram& hist, PorosityMethod method, const PorosityConfig& config);

struct PhantomSpec {
  std::size_t width = 128;
  std::size_t height = 128;
  std::size_t slices = 8;
  std::array<double, 3> fractions{0.2, 0.5, 0.3};  // void, porous, solid
  std::array<double, 3> means{50.0, 120.0, 190.0};
  double noise_sigma = 12.0;
  std::uint16_t maxval = 255;
  /// Side length of the square blocks phases are assigned to.
  std::size_t block = 8;
  std::uint64_t seed = 1;
};

struct Phantom {
  ImageStack stack;
  double ground_truth_porosity = 0.0;
  /// Phase fractions realised by the block assignment.
  std::array<double, 3> realised_fractions{};
};

/// Blocky three-phase stack with Gaussian intensity noise. Ground-truth
/// porosity uses the generating fractions and phi(mean_porous) with the phase
/// means as reference intensities.
Phantom generate_phantom(const PhantomSpec& spec);

}  // namespace histoseg
