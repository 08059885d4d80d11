#include "histoseg/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <thread>

#include "histoseg/errors.hpp"
#include "histoseg/histogram.hpp"
#include "histoseg/numerics.hpp"

namespace histoseg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// First crossing from positive to negative of f on (lo, hi), refined by
// bisection. Returns nullopt when f never changes sign that way.
std::optional<double> first_downcrossing(const std::function<double(double)>& f, double lo, double hi,
                                         std::size_t scan_points) {
  double prev_x = lo;
  double prev_f = f(lo);
  for (std::size_t k = 1; k <= scan_points; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(scan_points);
    const double fx = f(x);
    if (prev_f > 0.0 && fx <= 0.0) return refine_root(f, prev_x, x, 1e-12 * std::max(1.0, std::abs(x)));
    prev_x = x;
    prev_f = fx;
  }
  return std::nullopt;
}

}  // namespace

void CauchyMixture::validate() const {
  double sum = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    if (!(b[j] > 0.0)) fail(ErrorKind::InvalidArgument, "CauchyMixture: scales must be positive");
    if (!(c[j] > 0.0)) fail(ErrorKind::InvalidArgument, "CauchyMixture: weights must be positive");
    sum += c[j];
  }
  if (!(a[0] <= a[1] && a[1] <= a[2])) fail(ErrorKind::InvalidArgument, "CauchyMixture: locations must be ascending");
  if (std::abs(sum - 1.0) > 1e-12) fail(ErrorKind::InvalidArgument, "CauchyMixture: weights must sum to 1");
}

CauchyMixture sample_mixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> loc(-4.0, 4.0);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_real_distribution<double> weight(0.2, 0.5);
  CauchyMixture m;
  for (double& x : m.a) x = loc(rng);
  for (double& x : m.b) x = scale(rng);
  for (double& x : m.c) x = weight(rng);
  std::sort(m.a.begin(), m.a.end());
  const double sum = m.c[0] + m.c[1] + m.c[2];
  for (double& x : m.c) x /= sum;
  return m;
}

double component_pdf(const CauchyMixture& m, std::size_t j, double t) {
  const double z = (t - m.a[j]) / m.b[j];
  return m.c[j] / (std::numbers::pi * m.b[j] * (1.0 + z * z));
}

double mixture_pdf(const CauchyMixture& m, double t) {
  return component_pdf(m, 0, t) + component_pdf(m, 1, t) + component_pdf(m, 2, t);
}

double mixture_cdf(const CauchyMixture& m, double t) {
  double acc = 0.0;
  for (std::size_t j = 0; j < 3; ++j) acc += m.c[j] * (0.5 + std::atan((t - m.a[j]) / m.b[j]) / std::numbers::pi);
  return acc;
}

std::array<double, 2> reference_thresholds(const CauchyMixture& m) {
  std::array<double, 2> out{};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto f = [&](double t) { return component_pdf(m, k, t) - component_pdf(m, k + 1, t); };
    const auto root = first_downcrossing(f, m.a[k], m.a[k + 1], 4096);
    if (!root) {
      fail(ErrorKind::DegenerateMixture,
           "components " + std::to_string(k + 1) + " and " + std::to_string(k + 2) + " do not cross between their locations");
    }
    out[k] = *root;
  }
  return out;
}

std::vector<double> draw_samples(const CauchyMixture& m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = unit(rng);
    const std::size_t j = pick < m.c[0] ? 0 : (pick < m.c[0] + m.c[1] ? 1 : 2);
    out.push_back(m.a[j] + m.b[j] * std::tan(std::numbers::pi * (unit(rng) - 0.5)));
  }
  return out;
}

void GaussianMixtureTruth::validate() const {
  if (components.empty()) fail(ErrorKind::InvalidArgument, "GaussianMixtureTruth: no components");
  double sum = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    if (!(c.sigma2 > 0.0) || !(c.alpha > 0.0)) {
      fail(ErrorKind::InvalidArgument, "GaussianMixtureTruth: alphas and variances must be positive");
    }
    if (k > 0 && !(c.mu > components[k - 1].mu)) {
      fail(ErrorKind::InvalidArgument, "GaussianMixtureTruth: means must be strictly increasing");
    }
    sum += c.alpha;
  }
  if (std::abs(sum - 1.0) > 1e-12) fail(ErrorKind::InvalidArgument, "GaussianMixtureTruth: alphas must sum to 1");
}

double GaussianMixtureTruth::weighted_component(std::size_t k, double t) const {
  const auto& c = components[k];
  return c.alpha * gaussian(t, c.mu, c.sigma2);
}

double GaussianMixtureTruth::pdf(double t) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) acc += weighted_component(k, t);
  return acc;
}

std::vector<double> GaussianMixtureTruth::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pick = unit(rng);
    std::size_t k = 0;
    while (k + 1 < components.size() && pick >= components[k].alpha) {
      pick -= components[k].alpha;
      ++k;
    }
    out.push_back(components[k].mu + std::sqrt(components[k].sigma2) * normal(rng));
  }
  return out;
}

std::vector<double> gaussian_truth_thresholds(const GaussianMixtureTruth& g) {
  g.validate();
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < g.components.size(); ++k) {
    const auto f = [&](double t) { return g.weighted_component(k, t) - g.weighted_component(k + 1, t); };
    const auto root = first_downcrossing(f, g.components[k].mu, g.components[k + 1].mu, 4096);
    if (!root) {
      fail(ErrorKind::DegenerateMixture,
           "components " + std::to_string(k + 1) + " and " + std::to_string(k + 2) + " do not cross between their means");
    }
    out.push_back(*root);
  }
  return out;
}

const char* to_string(MinimaClass c) noexcept {
  switch (c) {
    case MinimaClass::Exact: return "exact";
    case MinimaClass::Over: return "over";
    case MinimaClass::Under: return "under";
  }
  return "unknown";
}

std::uint64_t case_seed(std::uint64_t seed, std::size_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ (0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(index) + 1)));
}

ValidationCase run_case(const ValidationConfig& config, std::size_t index) {
  ValidationCase vc;
  vc.index = index;
  vc.seed = case_seed(config.seed, index);
  vc.mixture = sample_mixture(vc.seed);
  try {
    vc.reference = reference_thresholds(vc.mixture);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateMixture) throw;
    vc.degenerate = true;
    return vc;
  }

  constexpr std::size_t kClasses = 3;
  try {
    const auto samples = draw_samples(vc.mixture, config.samples_per_case, splitmix64(vc.seed));
    const auto hist = from_samples(samples, config.lo, config.hi, config.n_bins);
    const auto fit = em_fit(hist, config.em);
    vc.em_iterations = fit.iterations;
    vc.em_converged = fit.converged;
    vc.em_variance = fit.model.variance();
    vc.base_minima = local_minima(fit.model, config.detect.minima).positions.size();
    vc.minima_class = vc.base_minima == kClasses - 1 ? MinimaClass::Exact
                      : vc.base_minima > kClasses - 1 ? MinimaClass::Over
                                                      : MinimaClass::Under;
    const auto found = detect_thresholds(fit.model, kClasses, config.dsigma2, config.detect);
    vc.scale_offset = found.scale_offset;
    for (std::size_t k = 0; k < 2; ++k) {
      vc.predicted[k] = found.thresholds[k];
      vc.deviation[k] = std::abs(found.thresholds[k] - vc.reference[k]);
    }
  } catch (const Error& e) {
    vc.failed = true;
    vc.failure = to_string(e.kind());
  }
  return vc;
}

namespace {

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HISTOSEG_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
  }
  return n;
}

}  // namespace

ValidationReport run_validation(const ValidationConfig& config) {
  if (config.n_cases == 0) fail(ErrorKind::InvalidArgument, "run_validation: need at least one case");
  ValidationReport report;
  report.n_bins = config.n_bins;
  report.samples_per_case = config.samples_per_case;
  report.dsigma2 = config.dsigma2;
  report.seed = config.seed;
  report.cases.resize(config.n_cases);

  const std::size_t workers = std::min(resolve_threads(config.threads), config.n_cases);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < config.n_cases; i = next.fetch_add(1)) {
      report.cases[i] = run_case(config, i);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  auto& s = report.summary;
  s.cases = config.n_cases;
  for (const auto& vc : report.cases) {
    if (vc.degenerate) {
      ++s.degenerate;
      continue;
    }
    ++s.evaluated;
    s.thresholds += 2;
    if (vc.failed) {
      ++s.failed;
      s.deviating += 2;
    } else {
      for (double d : vc.deviation) s.deviating += d > 1.0 ? 1 : 0;
    }
    switch (vc.minima_class) {
      case MinimaClass::Exact: ++s.exact; break;
      case MinimaClass::Over: ++s.over_resolved; break;
      case MinimaClass::Under: ++s.under_resolved; break;
    }
  }
  s.deviation_fraction = s.thresholds ? static_cast<double>(s.deviating) / static_cast<double>(s.thresholds) : 0.0;
  return report;
}

void write_validation_csv(const ValidationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "case,seed,a1,a2,a3,b1,b2,b3,c1,c2,c3,ref_tau1,ref_tau2,pred_tau1,pred_tau2,dev1,dev2,"
         "base_minima,minima_class,scale_offset,status\n"
      << std::setprecision(17);
  for (const auto& vc : report.cases) {
    const auto& m = vc.mixture;
    out << vc.index << ',' << vc.seed;
    for (double x : m.a) out << ',' << x;
    for (double x : m.b) out << ',' << x;
    for (double x : m.c) out << ',' << x;
    if (vc.degenerate) {
      out << ",,,,,,,,,,degenerate\n";
      continue;
    }
    out << ',' << vc.reference[0] << ',' << vc.reference[1];
    if (vc.failed) {
      out << ",,,,," << vc.base_minima << ',' << to_string(vc.minima_class) << ",," << vc.failure << '\n';
      continue;
    }
    out << ',' << vc.predicted[0] << ',' << vc.predicted[1] << ',' << vc.deviation[0] << ',' << vc.deviation[1]
        << ',' << vc.base_minima << ',' << to_string(vc.minima_class) << ',' << vc.scale_offset << ",ok\n";
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace histoseg
