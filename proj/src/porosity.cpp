#include "histoseg/porosity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "histoseg/baseline.hpp"
#include "histoseg/errors.hpp"

namespace histoseg {

std::size_t default_bins(std::uint16_t maxval) noexcept {
  return std::min<std::size_t>(1024, static_cast<std::size_t>(maxval) + 1);
}

std::vector<std::uint64_t> stack_counts(const ImageStack& stack, std::size_t n_bins) {
  if (n_bins == 0) fail(ErrorKind::InvalidArgument, "stack_counts: need at least one bin");
  std::vector<std::uint64_t> counts(n_bins, 0);
  const std::uint64_t range = static_cast<std::uint64_t>(stack.maxval) + 1;
  for (const auto& slice : stack.slices) {
    for (std::uint16_t v : slice) counts[static_cast<std::size_t>(v * n_bins / range)] += 1;
  }
  return counts;
}

Histogram combined_histogram(const ImageStack& stack, std::size_t n_bins) {
  if (stack.pixel_count() == 0) fail(ErrorKind::EmptyHistogram, "combined_histogram: empty stack");
  const auto counts = stack_counts(stack, n_bins);
  std::vector<double> raw(counts.begin(), counts.end());
  return Histogram::from_counts(raw, 0.0, static_cast<double>(stack.maxval) + 1.0);
}

ReferencePoints reference_points(const Histogram& hist, double tau1, double tau2) {
  if (!(tau1 < tau2)) fail(ErrorKind::InvalidArgument, "reference_points: need tau1 < tau2");
  double void_mass = 0.0, void_moment = 0.0, solid_mass = 0.0, solid_moment = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double t = hist.center(i);
    const double h = hist.density()[i];
    if (t < tau1) {
      void_mass += h;
      void_moment += h * t;
    } else if (t > tau2) {
      solid_mass += h;
      solid_moment += h * t;
    }
  }
  if (!(void_mass > 0.0)) fail(ErrorKind::EmptyCluster, "reference_points: no mass below tau1");
  if (!(solid_mass > 0.0)) fail(ErrorKind::EmptyCluster, "reference_points: no mass above tau2");
  return {void_moment / void_mass, solid_moment / solid_mass};
}

double porosity_of_intensity(double t, double t_void, double t_solid) {
  if (t_void == t_solid) fail(ErrorKind::DegenerateReferences, "porosity: void and solid references coincide");
  return std::clamp((t - t_solid) / (t_void - t_solid), 0.0, 1.0);
}

double mean_porosity(const Histogram& hist, double t_void, double t_solid) {
  double acc = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    acc += hist.density()[i] * porosity_of_intensity(hist.center(i), t_void, t_solid);
  }
  return std::clamp(acc * hist.dt(), 0.0, 1.0);
}

std::vector<double> porosity_histogram(const Histogram& hist, double t_void, double t_solid, std::size_t n_bins) {
  if (n_bins == 0) fail(ErrorKind::InvalidArgument, "porosity_histogram: need at least one bin");
  std::vector<double> mass(n_bins, 0.0);
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double phi = porosity_of_intensity(hist.center(i), t_void, t_solid);
    const auto k = std::min(n_bins - 1, static_cast<std::size_t>(phi * static_cast<double>(n_bins)));
    mass[k] += hist.density()[i] * hist.dt();
  }
  return mass;
}

const char* to_string(PorosityMethod m) noexcept {
  return m == PorosityMethod::KdeScaleSpace ? "kde-scale-space" : "kmeans";
}

PorosityReport estimate_porosity(const Histogram& hist, PorosityMethod method, const PorosityConfig& config) {
  PorosityReport report;
  report.method = method;
  if (method == PorosityMethod::KdeScaleSpace) {
    // The variance initialization and scale step are tuned to bins of order
    // one intensity unit; deeper data is searched on an 8-bit axis.
    constexpr double kWorkingRange = 256.0;
    const double scale = hist.hi() > kWorkingRange ? kWorkingRange / hist.hi() : 1.0;
    const Histogram working =
        scale == 1.0 ? hist : Histogram::from_counts(hist.density(), hist.lo() * scale, hist.hi() * scale);
    const auto fit = em_fit(working, config.em);
    report.em_iterations = fit.iterations;
    report.em_converged = fit.converged;
    report.em_variance = fit.model.variance();
    report.search = detect_thresholds(fit.model, 3, config.dsigma2, config.detect);
    report.tau1 = report.search.thresholds[0] / scale;
    report.tau2 = report.search.thresholds[1] / scale;
  } else {
    const auto km = kmeans_1d(hist, 3);
    report.tau1 = km.thresholds[0];
    report.tau2 = km.thresholds[1];
  }
  const auto refs = reference_points(hist, report.tau1, report.tau2);
  report.t_void = refs.t_void;
  report.t_solid = refs.t_solid;
  report.mean_porosity = mean_porosity(hist, refs.t_void, refs.t_solid);
  report.porosity_hist = porosity_histogram(hist, refs.t_void, refs.t_solid, config.porosity_bins);
  return report;
}

Phantom generate_phantom(const PhantomSpec& spec) {
  double sum = 0.0;
  for (double f : spec.fractions) {
    if (!(f >= 0.0)) fail(ErrorKind::InvalidArgument, "phantom: fractions must be non-negative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::InvalidArgument, "phantom: fractions must sum to 1");
  if (!(spec.means[0] < spec.means[1] && spec.means[1] < spec.means[2])) {
    fail(ErrorKind::InvalidArgument, "phantom: phase means must be increasing (void, porous, solid)");
  }
  if (!(spec.noise_sigma > 0.0)) fail(ErrorKind::InvalidArgument, "phantom: noise must be positive");
  if (spec.width == 0 || spec.height == 0 || spec.slices == 0 || spec.block == 0) {
    fail(ErrorKind::InvalidArgument, "phantom: dimensions must be positive");
  }

  const std::size_t bx = (spec.width + spec.block - 1) / spec.block;
  const std::size_t by = (spec.height + spec.block - 1) / spec.block;
  const std::size_t blocks = bx * by * spec.slices;
  std::vector<std::uint8_t> labels(blocks, 2);
  const auto n_void = static_cast<std::size_t>(std::llround(spec.fractions[0] * static_cast<double>(blocks)));
  const auto n_porous = std::min(blocks - n_void,
                                 static_cast<std::size_t>(std::llround(spec.fractions[1] * static_cast<double>(blocks))));
  std::fill_n(labels.begin(), n_void, std::uint8_t{0});
  std::fill_n(labels.begin() + static_cast<std::ptrdiff_t>(n_void), n_porous, std::uint8_t{1});

  std::mt19937_64 rng(spec.seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);

  Phantom out;
  out.stack.width = spec.width;
  out.stack.height = spec.height;
  out.stack.maxval = spec.maxval;
  std::array<std::size_t, 3> phase_pixels{};
  for (std::size_t s = 0; s < spec.slices; ++s) {
    std::vector<std::uint16_t> pixels(spec.width * spec.height);
    for (std::size_t y = 0; y < spec.height; ++y) {
      for (std::size_t x = 0; x < spec.width; ++x) {
        const std::uint8_t phase = labels[(s * by + y / spec.block) * bx + x / spec.block];
        ++phase_pixels[phase];
        const double v = std::round(spec.means[phase] + noise(rng));
        pixels[y * spec.width + x] = static_cast<std::uint16_t>(std::clamp(v, 0.0, static_cast<double>(spec.maxval)));
      }
    }
    out.stack.slices.push_back(std::move(pixels));
  }
  const double total = static_cast<double>(spec.width * spec.height * spec.slices);
  for (std::size_t k = 0; k < 3; ++k) out.realised_fractions[k] = static_cast<double>(phase_pixels[k]) / total;

  const double phi_porous = std::clamp((spec.means[1] - spec.means[2]) / (spec.means[0] - spec.means[2]), 0.0, 1.0);
  out.ground_truth_porosity = spec.fractions[0] + spec.fractions[1] * phi_porous;
  return out;
}

}  // namespace histoseg
