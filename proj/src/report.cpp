#include "histoseg/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "histoseg/errors.hpp"

namespace histoseg {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Bracket: return "bracket";
    case ErrorKind::EmptyHistogram: return "empty-histogram";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::ScaleUnderflow: return "scale-underflow";
    case ErrorKind::UnresolvableClusters: return "unresolvable-clusters";
    case ErrorKind::SearchLimit: return "search-limit";
    case ErrorKind::CountUnreachable: return "count-unreachable";
    case ErrorKind::DegenerateMixture: return "degenerate-mixture";
    case ErrorKind::EmptyCluster: return "empty-cluster";
    case ErrorKind::DegenerateReferences: return "degenerate-references";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return 2;
    case ErrorKind::Io: return 3;
    case ErrorKind::Format: return 4;
    case ErrorKind::EmptyHistogram: return 5;
    case ErrorKind::UnresolvableClusters: return 6;
    case ErrorKind::SearchLimit: return 7;
    case ErrorKind::CountUnreachable: return 8;
    case ErrorKind::ScaleUnderflow: return 9;
    case ErrorKind::Bracket: return 10;
    case ErrorKind::DegenerateMixture: return 11;
    case ErrorKind::EmptyCluster: return 12;
    case ErrorKind::DegenerateReferences: return 13;
  }
  return 1;
}

nlohmann::json to_json(const EmResult& fit, const EmConfig& config) {
  double mass = 0.0;
  for (double w : fit.model.weights()) mass += w;
  return {
      {"sigma2", fit.model.variance()},
      {"dt", fit.model.dt()},
      {"bins", fit.model.size()},
      {"mass", mass * fit.model.dt()},
      {"iterations", fit.iterations},
      {"converged", fit.converged},
      {"final_residual", fit.final_residual},
      {"final_change", fit.final_change},
      {"delta", config.delta},
      {"max_iterations", config.max_iterations},
      {"variance_rule", config.variance_rule == VarianceRule::Corrected ? "corrected" : "as-printed"},
  };
}

nlohmann::json to_json(const ThresholdResult& result) {
  return {
      {"thresholds", result.thresholds},
      {"scale_offset", result.scale_offset},
      {"direction", to_string(result.direction)},
      {"steps", result.steps},
      {"refined", result.refined},
      {"base_minima", result.base_minima},
  };
}

nlohmann::json to_json(const ValidationSummary& s) {
  return {
      {"cases", s.cases},
      {"degenerate", s.degenerate},
      {"failed", s.failed},
      {"evaluated", s.evaluated},
      {"thresholds", s.thresholds},
      {"deviating", s.deviating},
      {"deviation_fraction", s.deviation_fraction},
      {"minima_classes", {{"exact", s.exact}, {"over", s.over_resolved}, {"under", s.under_resolved}}},
  };
}

nlohmann::json to_json(const ValidationReport& report) {
  return {
      {"bins", report.n_bins},
      {"samples_per_case", report.samples_per_case},
      {"dsigma2", report.dsigma2},
      {"seed", report.seed},
      {"deviation_bound", 1.0},
      {"summary", to_json(report.summary)},
  };
}

nlohmann::json to_json(const PorosityReport& report) {
  nlohmann::json doc{
      {"method", to_string(report.method)},
      {"tau1", report.tau1},
      {"tau2", report.tau2},
      {"t_void", report.t_void},
      {"t_solid", report.t_solid},
      {"mean_porosity", report.mean_porosity},
  };
  if (report.method == PorosityMethod::KdeScaleSpace) {
    doc["search"] = to_json(report.search);
    doc["em"] = {{"iterations", report.em_iterations},
                 {"converged", report.em_converged},
                 {"sigma2", report.em_variance}};
  }
  return doc;
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_model_csv(const KdeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "t,beta\n" << std::setprecision(17);
  for (std::size_t i = 0; i < model.size(); ++i) out << model.centers()[i] << ',' << model.weights()[i] << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

void write_porosity_csv(const std::vector<double>& mass, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "porosity,mass\n" << std::setprecision(17);
  const double width = 1.0 / static_cast<double>(mass.size());
  for (std::size_t k = 0; k < mass.size(); ++k) out << (static_cast<double>(k) + 0.5) * width << ',' << mass[k] << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

std::string render_svg(const Histogram& hist, const std::vector<PlotCurve>& curves,
                       const std::vector<double>& thresholds, const std::string& title) {
  constexpr double kWidth = 800, kHeight = 450, kMargin = 50;
  const double x0 = hist.lo(), x1 = hist.hi();
  double ymax = 0.0;
  for (double v : hist.density()) ymax = std::max(ymax, v);
  for (const auto& c : curves) {
    for (double v : c.y) ymax = std::max(ymax, v);
  }
  if (!(ymax > 0.0)) ymax = 1.0;
  ymax *= 1.05;
  const auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); };
  const auto py = [&](double y) { return kHeight - kMargin - y / ymax * (kHeight - 2 * kMargin); };

  std::ostringstream svg;
  svg << std::setprecision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
  svg << "<g fill=\"#9ecae1\" stroke=\"none\">\n";
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double left = px(hist.lo() + static_cast<double>(i) * hist.dt());
    const double right = px(hist.lo() + static_cast<double>(i + 1) * hist.dt());
    const double top = py(hist.density()[i]);
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << std::max(right - left, 0.1)
        << "\" height=\"" << (kHeight - kMargin - top) << "\"/>\n";
  }
  svg << "</g>\n";
  for (const auto& c : curves) {
    svg << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.5\"";
    if (c.dashed) svg << " stroke-dasharray=\"6,4\"";
    svg << " points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) svg << px(c.x[i]) << ',' << py(c.y[i]) << ' ';
    svg << "\"><title>" << c.label << "</title></polyline>\n";
  }
  for (double t : thresholds) {
    svg << "<line x1=\"" << px(t) << "\" y1=\"" << kMargin << "\" x2=\"" << px(t) << "\" y2=\"" << kHeight - kMargin
        << "\" stroke=\"gray\" stroke-dasharray=\"5,5\"/>\n";
  }
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
      << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 18 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << x0 << "</text>\n";
  svg << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 18
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << x1 << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace histoseg
