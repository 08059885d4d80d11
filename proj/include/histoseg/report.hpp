#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "histoseg/kde.hpp"
#include "histoseg/porosity.hpp"
#include "histoseg/scalespace.hpp"
#include "histoseg/synthetic.hpp"

namespace histoseg {

nlohmann::json to_json(const EmResult& fit, const EmConfig& config);
nlohmann::json to_json(const ThresholdResult& result);
nlohmann::json to_json(const ValidationSummary& summary);
nlohmann::json to_json(const ValidationReport& report);  // header fields + summary
nlohmann::json to_json(const PorosityReport& report);

/// Pretty-printed JSON followed by a newline.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

/// Two-column `t,beta` CSV of model weights.
void write_model_csv(const KdeModel& model, const std::filesystem::path& path);

/// `porosity,mass` CSV with bin centers on [0, 1].
void write_porosity_csv(const std::vector<double>& mass, const std::filesystem::path& path);

struct PlotCurve {
  std::string label;
  std::string color;
  std::vector<double> x, y;
  bool dashed = false;
};

/// Histogram bars, overlay curves and vertical dashed threshold lines.
std::string render_svg(const Histogram& hist, const std::vector<PlotCurve>& curves,
                       const std::vector<double>& thresholds, const std::string& title);

}  // namespace histoseg
