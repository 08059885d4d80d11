#include <glob.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "histoseg/baseline.hpp"
#include "histoseg/errors.hpp"
#include "histoseg/histogram.hpp"
#include "histoseg/kde.hpp"
#include "histoseg/porosity.hpp"
#include "histoseg/report.hpp"
#include "histoseg/scalespace.hpp"
#include "histoseg/simd.hpp"
#include "histoseg/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace histoseg;

namespace {

struct EmFlags {
  double delta = 1e-6;
  std::size_t max_iterations = 10000;
  std::string variance_rule = "corrected";
  bool fixed_variance = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--delta", delta, "EM convergence tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iterations", max_iterations, "EM iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--variance-rule", variance_rule, "Bandwidth update rule")
        ->check(CLI::IsMember({"corrected", "as-printed"}));
    cmd->add_flag("--fixed-variance", fixed_variance, "Keep the bandwidth at its initial value");
  }

  EmConfig config() const {
    EmConfig c;
    c.delta = delta;
    c.max_iterations = max_iterations;
    c.update_variance = !fixed_variance;
    c.variance_rule = variance_rule == "as-printed" ? VarianceRule::AsPrinted : VarianceRule::Corrected;
    return c;
  }
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

void emit_json(const json& doc, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json(doc, path);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return x;
}

PlotCurve model_curve(const KdeModel& model, double lo, double hi, const std::string& label, const std::string& color,
                      bool dashed) {
  PlotCurve c{label, color, linspace(lo, hi, 800), {}, dashed};
  c.y.reserve(c.x.size());
  for (double t : c.x) c.y.push_back(evaluate(model, t));
  return c;
}

// Paths and glob patterns, expanded in sorted order.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& arg : args) {
    if (arg.find_first_of("*?[") == std::string::npos) {
      out.emplace_back(arg);
      continue;
    }
    glob_t g{};
    const int rc = ::glob(arg.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) fail(ErrorKind::Io, "cannot expand pattern " + arg);
  }
  return out;
}

// ---------------------------------------------------------------- kde

struct KdeArgs {
  std::string input, output, json_path, trace;
  EmFlags em;
};

int run_kde(const KdeArgs& a) {
  const auto hist = read_csv(a.input, warn);
  const auto config = a.em.config();
  const auto fit = em_fit(hist, config, !a.trace.empty());
  write_model_csv(fit.model, a.output);
  if (!a.trace.empty()) write_em_trace(fit.trace, a.trace);
  const std::string sidecar = a.json_path.empty() ? fs::path(a.output).replace_extension(".json").string() : a.json_path;
  emit_json(to_json(fit, config), sidecar);
  return 0;
}

// ---------------------------------------------------------------- threshold

struct ThresholdArgs {
  std::string input, output, plot, trace;
  std::size_t classes = 3;
  double dsigma2 = 0.01;
  std::size_t max_steps = 10000;
  EmFlags em;
};

int run_threshold(const ThresholdArgs& a) {
  const auto hist = read_csv(a.input, warn);
  const auto config = a.em.config();
  const auto fit = em_fit(hist, config);
  DetectOptions options;
  options.max_steps = a.max_steps;
  std::vector<ScaleWalkRow> walk;
  const auto result = detect_thresholds(fit.model, a.classes, a.dsigma2, options, a.trace.empty() ? nullptr : &walk);
  if (!a.trace.empty()) write_scale_trace(walk, a.trace);

  json doc = to_json(result);
  doc["classes"] = a.classes;
  doc["dsigma2"] = a.dsigma2;
  doc["em"] = to_json(fit, config);
  emit_json(doc, a.output);

  if (!a.plot.empty()) {
    const auto final_model = at_scale(fit.model, result.scale_offset);
    const std::vector<PlotCurve> curves{
        model_curve(fit.model, hist.lo(), hist.hi(), "KD fitted", "#d62728", false),
        model_curve(final_model, hist.lo(), hist.hi(), "KD at threshold scale", "#2ca02c", true)};
    write_text(a.plot, render_svg(hist, curves, result.thresholds, "Histogram thresholds"));
  }
  return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
  std::size_t cases = 200;
  std::size_t bins = 1000;
  std::size_t samples = 10000;
  double dsigma2 = 0.01;
  std::uint64_t seed = 1;
  std::size_t max_steps = 10000;
  std::string out_dir = ".";
  EmFlags em;
};

int run_validate(const ValidateArgs& a) {
  ValidationConfig config;
  config.n_cases = a.cases;
  config.n_bins = a.bins;
  config.samples_per_case = a.samples;
  config.dsigma2 = a.dsigma2;
  config.seed = a.seed;
  config.em = a.em.config();
  config.detect.max_steps = a.max_steps;
  const auto report = run_validation(config);
  fs::create_directories(a.out_dir);
  write_json(to_json(report), fs::path(a.out_dir) / "validation.json");
  write_validation_csv(report, fs::path(a.out_dir) / "validation_cases.csv");
  const auto& s = report.summary;
  std::cout << "cases " << s.cases << ", degenerate " << s.degenerate << ", failed " << s.failed << ", deviating "
            << s.deviating << "/" << s.thresholds << " (fraction " << std::setprecision(4) << s.deviation_fraction
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------- porosity

struct PorosityArgs {
  std::vector<std::string> inputs;
  std::string method = "kde";
  std::size_t bins = 0;
  double dsigma2 = 0.01;
  std::size_t max_steps = 10000;
  std::size_t porosity_bins = 100;
  std::string output, porosity_csv, plot;
  EmFlags em;
};

int run_porosity(const PorosityArgs& a) {
  const auto paths = expand_inputs(a.inputs);
  const auto stack = load_stack(paths);
  const std::size_t bins = a.bins == 0 ? default_bins(stack.maxval) : a.bins;
  const auto hist = combined_histogram(stack, bins);

  PorosityConfig config;
  config.n_bins = bins;
  config.dsigma2 = a.dsigma2;
  config.em = a.em.config();
  config.detect.max_steps = a.max_steps;
  config.porosity_bins = a.porosity_bins;

  const auto chosen = a.method == "kmeans" ? PorosityMethod::KMeans : PorosityMethod::KdeScaleSpace;
  const auto other = chosen == PorosityMethod::KMeans ? PorosityMethod::KdeScaleSpace : PorosityMethod::KMeans;
  const auto report = estimate_porosity(hist, chosen, config);

  json doc = to_json(report);
  doc["slices"] = stack.slices.size();
  doc["width"] = stack.width;
  doc["height"] = stack.height;
  doc["maxval"] = stack.maxval;
  doc["bins"] = bins;

  // The other method runs on the same histogram for comparison; its failure
  // is reported, not fatal.
  std::ostringstream table;
  table << std::left << std::setw(18) << "method" << std::setw(12) << "tau1" << std::setw(12) << "tau2"
        << std::setw(12) << "t_void" << std::setw(12) << "t_solid" << "porosity\n";
  const auto row = [&](const PorosityReport& r) {
    table << std::left << std::fixed << std::setprecision(4) << std::setw(18) << to_string(r.method) << std::setw(12)
          << r.tau1 << std::setw(12) << r.tau2 << std::setw(12) << r.t_void << std::setw(12) << r.t_solid
          << r.mean_porosity << '\n';
  };
  row(report);
  json comparison = json::array();
  comparison.push_back({{"method", to_string(report.method)}, {"mean_porosity", report.mean_porosity}});
  try {
    const auto alt = estimate_porosity(hist, other, config);
    row(alt);
    comparison.push_back({{"method", to_string(alt.method)},
                          {"tau1", alt.tau1},
                          {"tau2", alt.tau2},
                          {"mean_porosity", alt.mean_porosity}});
  } catch (const Error& e) {
    table << std::left << std::setw(18) << to_string(other) << "failed: " << to_string(e.kind()) << '\n';
    comparison.push_back({{"method", to_string(other)}, {"error", to_string(e.kind())}});
  }
  doc["comparison"] = comparison;

  emit_json(doc, a.output);
  std::cerr << table.str();
  if (!a.porosity_csv.empty()) write_porosity_csv(report.porosity_hist, a.porosity_csv);
  if (!a.plot.empty()) {
    write_text(a.plot, render_svg(hist, {}, {report.tau1, report.tau2}, "Combined intensity histogram"));
  }
  return 0;
}

// ---------------------------------------------------------------- phantom

struct PhantomArgs {
  std::string out_dir;
  PhantomSpec spec;
  std::vector<double> fractions{0.2, 0.5, 0.3};
  std::vector<double> means{50.0, 120.0, 190.0};
};

int run_phantom(PhantomArgs a) {
  for (std::size_t k = 0; k < 3; ++k) {
    a.spec.fractions[k] = a.fractions[k];
    a.spec.means[k] = a.means[k];
  }
  const auto phantom = generate_phantom(a.spec);
  const auto paths = write_stack(phantom.stack, a.out_dir);
  json doc = {
      {"width", a.spec.width},
      {"height", a.spec.height},
      {"slices", a.spec.slices},
      {"maxval", a.spec.maxval},
      {"block", a.spec.block},
      {"seed", a.spec.seed},
      {"noise_sigma", a.spec.noise_sigma},
      {"fractions", a.spec.fractions},
      {"means", a.spec.means},
      {"realised_fractions", phantom.realised_fractions},
      {"ground_truth_porosity", phantom.ground_truth_porosity},
      {"files", paths.size()},
  };
  write_json(doc, fs::path(a.out_dir) / "phantom.json");
  return 0;
}

// ---------------------------------------------------------------- mixture

struct MixtureArgs {
  std::vector<std::string> components;  // alpha:mu:var
  double lo = -10.0, hi = 10.0;
  std::size_t bins = 200;
  std::size_t samples = 0;
  std::uint64_t seed = 1;
  std::string output;
};

int run_mixture(const MixtureArgs& a) {
  GaussianMixtureTruth truth;
  for (const auto& spec : a.components) {
    GaussianComponent c{};
    char sep1 = 0, sep2 = 0;
    std::istringstream in(spec);
    if (!(in >> c.alpha >> sep1 >> c.mu >> sep2 >> c.sigma2) || sep1 != ':' || sep2 != ':' || !in.eof()) {
      fail(ErrorKind::InvalidArgument, "component '" + spec + "' is not alpha:mu:var");
    }
    truth.components.push_back(c);
  }
  truth.validate();
  Histogram hist;
  if (a.samples > 0) {
    hist = from_samples(truth.sample(a.samples, a.seed), a.lo, a.hi, a.bins);
  } else {
    std::vector<double> raw(a.bins);
    const double dt = (a.hi - a.lo) / static_cast<double>(a.bins);
    for (std::size_t i = 0; i < a.bins; ++i) raw[i] = truth.pdf(a.lo + (static_cast<double>(i) + 0.5) * dt);
    hist = Histogram::from_counts(raw, a.lo, a.hi);
  }
  write_csv(hist, a.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Histogram segmentation by kernel-density deconvolution and scale-space minima"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "histoseg 1.0.0");

  KdeArgs kde;
  auto* kde_cmd = app.add_subcommand("kde", "Fit the kernel-density model to a t,h histogram CSV");
  kde_cmd->add_option("input", kde.input, "Histogram CSV")->required();
  kde_cmd->add_option("-o,--output", kde.output, "Model CSV (t,beta)")->required();
  kde_cmd->add_option("--json", kde.json_path, "Metadata JSON (default: output with .json extension)");
  kde_cmd->add_option("--trace", kde.trace, "Per-iteration trace CSV");
  kde.em.attach(kde_cmd);

  ThresholdArgs thr;
  auto* thr_cmd = app.add_subcommand("threshold", "Segment a histogram into C classes");
  thr_cmd->add_option("input", thr.input, "Histogram CSV")->required();
  thr_cmd->add_option("-C,--classes", thr.classes, "Number of classes")->check(CLI::Range(2, 1000));
  thr_cmd->add_option("--dsigma2", thr.dsigma2, "Scale step")->check(CLI::PositiveNumber);
  thr_cmd->add_option("--max-steps", thr.max_steps, "Scale walk step cap")->check(CLI::PositiveNumber);
  thr_cmd->add_option("-o,--output", thr.output, "Result JSON (default: stdout)");
  thr_cmd->add_option("--plot", thr.plot, "SVG plot");
  thr_cmd->add_option("--trace", thr.trace, "Scale-walk trace CSV");
  thr.em.attach(thr_cmd);

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate", "Run the Cauchy-mixture validation batch");
  val_cmd->add_option("--cases", val.cases, "Number of mixtures")->check(CLI::PositiveNumber);
  val_cmd->add_option("--bins", val.bins, "Histogram bins on [-15, 15]")->check(CLI::Range(2, 1 << 20));
  val_cmd->add_option("--samples", val.samples, "Samples per mixture")->check(CLI::PositiveNumber);
  val_cmd->add_option("--dsigma2", val.dsigma2, "Scale step")->check(CLI::PositiveNumber);
  val_cmd->add_option("--seed", val.seed, "Run seed");
  val_cmd->add_option("--max-steps", val.max_steps, "Scale walk step cap")->check(CLI::PositiveNumber);
  val_cmd->add_option("--out-dir", val.out_dir, "Directory for validation.json and validation_cases.csv");
  val.em.attach(val_cmd);

  PorosityArgs por;
  auto* por_cmd = app.add_subcommand("porosity", "Estimate porosity of a PGM image stack");
  por_cmd->add_option("inputs", por.inputs, "PGM files or glob patterns")->required();
  por_cmd->add_option("--method", por.method, "Threshold method")->check(CLI::IsMember({"kde", "kmeans"}));
  por_cmd->add_option("--bins", por.bins, "Histogram bins (default min(1024, maxval + 1))");
  por_cmd->add_option("--dsigma2", por.dsigma2, "Scale step")->check(CLI::PositiveNumber);
  por_cmd->add_option("--max-steps", por.max_steps, "Scale walk step cap")->check(CLI::PositiveNumber);
  por_cmd->add_option("--porosity-bins", por.porosity_bins, "Bins of the porosity histogram")
      ->check(CLI::PositiveNumber);
  por_cmd->add_option("-o,--output", por.output, "Report JSON (default: stdout)");
  por_cmd->add_option("--porosity-csv", por.porosity_csv, "Porosity histogram CSV");
  por_cmd->add_option("--plot", por.plot, "SVG plot of the combined histogram");
  por.em.attach(por_cmd);

  PhantomArgs ph;
  auto* ph_cmd = app.add_subcommand("phantom", "Write a seeded three-phase phantom stack");
  ph_cmd->add_option("--out-dir", ph.out_dir, "Output directory")->required();
  ph_cmd->add_option("--seed", ph.spec.seed, "Seed");
  ph_cmd->add_option("--width", ph.spec.width, "Slice width")->check(CLI::PositiveNumber);
  ph_cmd->add_option("--height", ph.spec.height, "Slice height")->check(CLI::PositiveNumber);
  ph_cmd->add_option("--slices", ph.spec.slices, "Number of slices")->check(CLI::PositiveNumber);
  ph_cmd->add_option("--block", ph.spec.block, "Phase block size")->check(CLI::PositiveNumber);
  ph_cmd->add_option("--noise", ph.spec.noise_sigma, "Intensity noise sigma")->check(CLI::PositiveNumber);
  ph_cmd->add_option("--maxval", ph.spec.maxval, "PGM maxval")->check(CLI::Range(1, 65535));
  ph_cmd->add_option("--fractions", ph.fractions, "Void, porous, solid fractions")->expected(3);
  ph_cmd->add_option("--means", ph.means, "Void, porous, solid mean intensities")->expected(3);

  MixtureArgs mix;
  auto* mix_cmd = app.add_subcommand("mixture", "Write a Gaussian-mixture histogram CSV");
  mix_cmd->add_option("-c,--component", mix.components, "Component alpha:mu:var (repeatable)")->required();
  mix_cmd->add_option("--lo", mix.lo, "Lower edge");
  mix_cmd->add_option("--hi", mix.hi, "Upper edge");
  mix_cmd->add_option("--bins", mix.bins, "Number of bins")->check(CLI::PositiveNumber);
  mix_cmd->add_option("--samples", mix.samples, "Draw samples instead of sampling the density");
  mix_cmd->add_option("--seed", mix.seed, "Sampling seed");
  mix_cmd->add_option("-o,--output", mix.output, "Histogram CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::InvalidArgument);
  }

  try {
    if (*kde_cmd) return run_kde(kde);
    if (*thr_cmd) return run_threshold(thr);
    if (*val_cmd) return run_validate(val);
    if (*por_cmd) return run_porosity(por);
    if (*ph_cmd) return run_phantom(ph);
    if (*mix_cmd) return run_mixture(mix);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
