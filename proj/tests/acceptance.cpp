// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 when any fails.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "histoseg/baseline.hpp"
#include "histoseg/errors.hpp"
#include "histoseg/histogram.hpp"
#include "histoseg/kde.hpp"
#include "histoseg/numerics.hpp"
#include "histoseg/porosity.hpp"
#include "histoseg/scalespace.hpp"
#include "histoseg/synthetic.hpp"

using namespace histoseg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Histogram density_histogram(const GaussianMixtureTruth& g, double lo, double hi, std::size_t n) {
  std::vector<double> raw(n);
  const double dt = (hi - lo) / double(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = g.pdf(lo + (double(i) + 0.5) * dt);
  return Histogram::from_counts(raw, lo, hi);
}

Histogram two_mode_samples(std::uint64_t seed, std::size_t n, std::size_t bins) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double split = 0.3 + 0.4 * u(rng);
  std::vector<double> x(n);
  for (double& v : x) v = u(rng) < split ? -2.0 + 0.7 * g(rng) : 1.5 + g(rng);
  return from_samples(x, -6.0, 6.0, bins);
}

// Minima of the sampled model on a uniform grid with the given spacing.
std::vector<double> dense_minima(const KdeModel& m, double spacing) {
  const double lo = m.centers().front(), hi = m.centers().back();
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / spacing));
  const double h = (hi - lo) / double(points);
  std::vector<double> out;
  double a = evaluate(m, lo), b = evaluate(m, lo + h);
  for (std::size_t i = 2; i <= points; ++i) {
    const double c = evaluate(m, lo + h * double(i));
    if (b < a && b <= c) out.push_back(lo + h * double(i - 1));
    a = b;
    b = c;
  }
  return out;
}

// Cauchy validation summaries are shared by the first two criteria.
struct ValidationRuns {
  bool have_fine = false, have_coarse = false;
  ValidationReport fine, coarse;
  double fine_seconds = 0.0;
};

ValidationReport run_batch(std::size_t bins, double* seconds) {
  ValidationConfig config;
  config.n_cases = 200;
  config.n_bins = bins;
  const auto t0 = std::chrono::steady_clock::now();
  auto report = run_validation(config);
  if (seconds) *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

const ValidationReport& fine_run(ValidationRuns& runs) {
  if (!runs.have_fine) {
    runs.fine = run_batch(1000, &runs.fine_seconds);
    runs.have_fine = true;
  }
  return runs.fine;
}

const ValidationReport& coarse_run(ValidationRuns& runs) {
  if (!runs.have_coarse) {
    runs.coarse = run_batch(100, nullptr);
    runs.have_coarse = true;
  }
  return runs.coarse;
}

Outcome cauchy_fine(ValidationRuns& runs) {
  const auto& s = fine_run(runs).summary;
  const bool pass = s.deviation_fraction <= 0.25 && runs.fine_seconds < 300.0;
  return {pass, fmt("200 Cauchy cases at 1000 bins: deviation fraction %.3f (bound 0.25; %zu/%zu thresholds, "
                    "%zu degenerate, %zu failed), %.1f s (bound 300 s)",
                    s.deviation_fraction, s.deviating, s.thresholds, s.degenerate, s.failed, runs.fine_seconds)};
}

Outcome cauchy_coarse(ValidationRuns& runs) {
  const double fine = fine_run(runs).summary.deviation_fraction;
  const double coarse = coarse_run(runs).summary.deviation_fraction;
  return {coarse >= fine, fmt("deviation fraction at 100 bins %.3f >= at 1000 bins %.3f", coarse, fine)};
}

Outcome separated_gaussians() {
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 25; ++s) {
    std::mt19937_64 rng(100 + s);
    std::uniform_real_distribution<double> sd(0.5, 1.0), gap(5.0, 7.0), al(0.2, 0.5);
    const double sg[3] = {sd(rng), sd(rng), sd(rng)};
    const double a[3] = {al(rng), al(rng), al(rng)};
    const double asum = a[0] + a[1] + a[2];
    double mu[3] = {0.0, 0.0, 0.0};
    mu[1] = mu[0] + gap(rng) * std::max(sg[0], sg[1]);
    mu[2] = mu[1] + gap(rng) * std::max(sg[1], sg[2]);
    GaussianMixtureTruth g;
    for (int k = 0; k < 3; ++k) g.components.push_back({a[k] / asum, mu[k] - mu[1], sg[k] * sg[k]});
    const double lo = g.components[0].mu - 6 * sg[0], hi = g.components[2].mu + 6 * sg[2];
    const auto hist = density_histogram(g, lo, hi, 400);
    const auto ref = gaussian_truth_thresholds(g);
    try {
      const auto r = detect_thresholds(em_fit(hist).model, 3, 0.01);
      const double err = std::max(std::abs(r.thresholds[0] - ref[0]), std::abs(r.thresholds[1] - ref[1])) / hist.dt();
      worst = std::max(worst, err);
      ok += err <= 2.0;
    } catch (const Error&) {
      worst = INFINITY;
    }
  }
  return {ok == 25, fmt("%zu/25 separated 3-Gaussian cases within 2 dt of the crossings (worst %.2f dt)", ok, worst)};
}

// Finer walk on a fitted model; the dense-grid check confirms the minimum.
std::string finer_walk(const KdeModel& model, double* err, bool* finer) {
  const auto r = detect_thresholds(model, 2, 0.01);
  const auto grid = dense_minima(at_scale(model, r.scale_offset), 1e-5);
  const double t = r.thresholds.at(0);
  *err = std::abs(t);
  *finer = r.direction == Direction::Finer && grid.size() == 1 && std::abs(grid[0] - t) <= 1e-5;
  return fmt("%s walk to offset %.4f, threshold %.5f", to_string(r.direction), r.scale_offset, t);
}

Outcome symmetric_finer() {
  // Mean gap 1.2 sigma: unimodal for every kernel width.
  GaussianMixtureTruth g;
  g.components = {{0.5, -0.6, 1.0}, {0.5, 0.6, 1.0}};
  const auto hist = density_histogram(g, -8.0, 8.0, 160);
  const auto fit = em_fit(hist);
  std::string detail = fmt("gap 1.2 sigma, C=2, fitted sigma2 %.4f: ", fit.model.variance());
  bool pass = false;
  try {
    double err = 0.0;
    bool finer = false;
    detail += finer_walk(fit.model, &err, &finer) + " (bound 0.05)";
    pass = finer && err <= 0.05;
  } catch (const Error& e) {
    detail += e.what();
  }

  // Supplementary: a bimodal pair (gap 2.4 sigma) merged by a +1.0 shift.
  GaussianMixtureTruth wide;
  wide.components = {{0.5, -1.2, 1.0}, {0.5, 1.2, 1.0}};
  EmConfig config;
  config.max_iterations = 2000;
  const auto merged = at_scale(em_fit(density_histogram(wide, -8.0, 8.0, 160), config).model, 1.0);
  try {
    double err = 0.0;
    bool finer = false;
    detail += "; merged gap 2.4 sigma: " + finer_walk(merged, &err, &finer);
  } catch (const Error& e) {
    detail += std::string("; merged gap 2.4 sigma: ") + e.what();
  }
  return {pass, detail};
}

Outcome kl_and_semigroup() {
  EmConfig config;
  config.update_variance = false;
  double worst_rise = 0.0, worst_semigroup = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto hist = two_mode_samples(seed, 3000, 100);
    EmSolver solver(hist, config);
    double prev = solver.kl_divergence();
    for (int it = 0; it < 200; ++it) {
      solver.step();
      const double kl = solver.kl_divergence();
      worst_rise = std::max(worst_rise, kl - prev);
      prev = kl;
    }
    const auto m = solver.model();
    const double delta = 0.35, dx = 0.005;
    const std::size_t n = 4801, c = 2400;
    std::vector<double> f(n), k(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (double(i) - double(c)) * dx;
      f[i] = evaluate(m, t);
      k[i] = gaussian(t, 0.0, delta);
    }
    const auto conv = linear_convolve(f, k, c);
    const auto shifted = at_scale(m, delta);
    for (std::size_t i = 0; i < n; ++i) {
      worst_semigroup =
          std::max(worst_semigroup, std::abs(conv[i] * dx - evaluate(shifted, (double(i) - double(c)) * dx)));
    }
  }
  return {worst_rise <= 1e-10 && worst_semigroup <= 1e-6,
          fmt("10 histograms: largest KL rise %.3g (bound 1e-10), semigroup error %.3g (bound 1e-6)", worst_rise,
              worst_semigroup)};
}

Outcome causality() {
  std::size_t violations = 0, first = 0, last = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GaussianMixtureTruth g;
    g.components = {{0.3, -4.0, 1.0}, {0.4, 0.0, 0.8}, {0.3, 4.5, 1.2}};
    const auto hist = from_samples(g.sample(5000, seed), -10.0, 10.0, 200);
    const auto model = em_fit(hist).model;
    std::size_t prev = SIZE_MAX;
    for (int k = 0; k < 20; ++k) {
      const std::size_t count = local_minima(at_scale(model, 0.05 * k)).positions.size();
      if (k == 0) first += count;
      if (k == 19) last += count;
      violations += count > prev;
      prev = count;
    }
  }
  return {violations == 0, fmt("10 models x 20 offsets: %zu increases in the minima count (total %zu -> %zu)",
                               violations, first, last)};
}

Outcome bin_consistency() {
  GaussianMixtureTruth g;
  g.components = {{0.3, -4.0, 1.0}, {0.4, 0.0, 0.8}, {0.3, 4.5, 1.2}};
  const auto x = g.sample(100000, 7);
  const auto coarse = from_samples(x, -10.0, 10.0, 100);
  const auto fine = from_samples(x, -10.0, 10.0, 1000);
  try {
    const auto a = detect_thresholds(em_fit(coarse).model, 3, 0.01);
    const auto b = detect_thresholds(em_fit(fine).model, 3, 0.01);
    const double diff = std::max(std::abs(a.thresholds[0] - b.thresholds[0]), std::abs(a.thresholds[1] - b.thresholds[1]));
    return {diff <= 2.0 * coarse.dt(), fmt("100 bins (%.4f, %.4f) vs 1000 bins (%.4f, %.4f): max diff %.4f (bound %.2f)",
                                           a.thresholds[0], a.thresholds[1], b.thresholds[0], b.thresholds[1], diff,
                                           2.0 * coarse.dt())};
  } catch (const Error& e) {
    return {false, e.what()};
  }
}

Outcome phantom_porosity() {
  const auto ph = generate_phantom(PhantomSpec{});
  const auto hist = combined_histogram(ph.stack, default_bins(ph.stack.maxval));
  try {
    const auto kde = estimate_porosity(hist, PorosityMethod::KdeScaleSpace, {});
    const auto km = estimate_porosity(hist, PorosityMethod::KMeans, {});
    const double rel = std::abs(kde.mean_porosity - ph.ground_truth_porosity) / ph.ground_truth_porosity;
    return {rel <= 0.05, fmt("phantom 0.2/0.5/0.3: truth %.4f, kde %.4f (rel err %.2f%%, bound 5%%), kmeans %.4f",
                             ph.ground_truth_porosity, kde.mean_porosity, 100 * rel, km.mean_porosity)};
  } catch (const Error& e) {
    return {false, e.what()};
  }
}

KdeModel random_spike_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 80;
  const double dt = 0.1;
  std::vector<double> c(n), w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) c[i] = -4.0 + (double(i) + 0.5) * dt;
  const std::size_t spikes = 2 + static_cast<std::size_t>(u(rng) * 4);
  double sum = 0.0;
  for (std::size_t s = 0; s < spikes; ++s) {
    const auto i = static_cast<std::size_t>(10 + u(rng) * 60);
    const double v = 0.2 + u(rng);
    w[i] += v;
    sum += v;
  }
  for (double& x : w) x /= sum * dt;
  return KdeModel(c, w, 0.05 + 0.3 * u(rng), dt);
}

Outcome oracles() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  double conv_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 512)(rng);
    std::vector<double> s(n), k(n);
    for (double& v : s) v = u(rng);
    for (double& v : k) v = u(rng);
    const std::size_t c = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const auto fast = linear_convolve(s, k, c);
    const auto slow = direct_convolve(s, k, c);
    for (std::size_t i = 0; i < n; ++i) conv_err = std::max(conv_err, std::abs(fast[i] - slow[i]));
  }

  double minima_err = 0.0;
  std::size_t minima_total = 0;
  bool count_mismatch = false;
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_spike_model(rng);
    const auto got = local_minima(m).positions;
    const auto want = dense_minima(m, 1e-5);
    if (got.size() != want.size()) {
      count_mismatch = true;
      continue;
    }
    minima_total += got.size();
    for (std::size_t i = 0; i < got.size(); ++i) minima_err = std::max(minima_err, std::abs(got[i] - want[i]));
  }

  double deriv_err = 0.0;
  const auto m = random_spike_model(rng);
  const double step = 1e-6 * std::sqrt(m.variance());
  std::uniform_real_distribution<double> where(-3.5, 3.5);
  for (int i = 0; i < 100; ++i) {
    const double t = where(rng);
    const double fd1 = (evaluate(m, t + step) - evaluate(m, t - step)) / (2.0 * step);
    const double fd2 = (derivative1(m, t + step) - derivative1(m, t - step)) / (2.0 * step);
    const double a1 = derivative1(m, t), a2 = derivative2(m, t);
    deriv_err = std::max(deriv_err, std::abs(a1 - fd1) / std::max(std::abs(a1), 1e-3));
    deriv_err = std::max(deriv_err, std::abs(a2 - fd2) / std::max(std::abs(a2), 1e-3));
  }

  const bool pass = conv_err <= 1e-10 && !count_mismatch && minima_err <= 1e-5 && deriv_err <= 1e-5;
  return {pass, fmt("conv vs direct %.3g (bound 1e-10); %zu minima vs dense grid %.3g%s (bound 1e-5); "
                    "derivatives vs central differences %.3g relative (bound 1e-5)",
                    conv_err, minima_total, minima_err, count_mismatch ? " with a count mismatch" : "", deriv_err)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome cli_determinism(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found: '" + cli + "'"};
  const auto root = fs::temp_directory_path() / ("histoseg_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::string> failures;
  for (const char* run : {"a", "b"}) {
    const auto d = root / run;
    fs::create_directories(d);
    const std::string x = quote(cli) + " ";
    const std::vector<std::string> commands = {
        x + "mixture -c 0.3:-4:1 -c 0.4:0:0.8 -c 0.3:4.5:1.2 --bins 150 --samples 20000 --seed 3 -o " +
            quote(d / "h.csv"),
        x + "kde " + quote(d / "h.csv") + " -o " + quote(d / "m.csv") + " --trace " + quote(d / "em.csv"),
        x + "threshold " + quote(d / "h.csv") + " -C 3 -o " + quote(d / "t.json") + " --plot " +
            quote(d / "t.svg") + " --trace " + quote(d / "walk.csv"),
        x + "validate --cases 6 --bins 200 --samples 3000 --out-dir " + quote(d / "val"),
        x + "phantom --out-dir " + quote(d / "ph") + " --width 64 --height 64 --slices 3",
        x + "porosity " + quote(d / "ph" / "*.pgm") + " -o " + quote(d / "p.json") + " --porosity-csv " +
            quote(d / "p.csv") + " --plot " + quote(d / "p.svg"),
        x + "porosity " + quote(d / "ph" / "*.pgm") + " --method kmeans -o " + quote(d / "pk.json"),
    };
    for (const auto& cmd : commands) {
      if (std::system((cmd + " > /dev/null 2>&1").c_str()) != 0) failures.push_back("command failed: " + cmd);
    }
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    const auto other = root / "b" / rel;
    ++compared;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) failures.push_back("differs: " + rel.string());
  }
  fs::remove_all(root);
  if (!failures.empty()) return {false, failures.front()};
  return {compared >= 15, fmt("%zu output files byte-identical across two runs", compared)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"histoseg acceptance gate"};
  std::string cli;
  std::vector<int> only;
  app.add_option("--cli", cli, "Path to the histoseg binary");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  ValidationRuns runs;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"cauchy-1000", [&] { return cauchy_fine(runs); }},
      {"cauchy-100-vs-1000", [&] { return cauchy_coarse(runs); }},
      {"separated-gaussians", separated_gaussians},
      {"symmetric-finer-walk", symmetric_finer},
      {"kl-and-semigroup", kl_and_semigroup},
      {"causality", causality},
      {"bin-consistency", bin_consistency},
      {"phantom-porosity", phantom_porosity},
      {"oracles", oracles},
      {"cli-determinism", [&] { return cli_determinism(cli); }},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failed += !out.pass;
    std::printf("%s %2d %-22s %s\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first, out.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
