#include "histoseg/histogram.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "histoseg/errors.hpp"

namespace histoseg {

Histogram Histogram::from_counts(std::span<const double> counts, double lo, double hi) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    fail(ErrorKind::InvalidArgument, "histogram range must satisfy lo < hi");
  }
  if (counts.empty()) fail(ErrorKind::InvalidArgument, "histogram needs at least one bin");
  double total = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0) || !std::isfinite(c)) fail(ErrorKind::InvalidArgument, "histogram counts must be finite and >= 0");
    total += c;
  }
  if (total <= 0.0) fail(ErrorKind::EmptyHistogram, "histogram has no mass");

  Histogram hist;
  hist.lo_ = lo;
  hist.dt_ = (hi - lo) / static_cast<double>(counts.size());
  const double scale = 1.0 / (hist.dt_ * total);
  hist.h_.reserve(counts.size());
  for (double c : counts) hist.h_.push_back(c * scale);
  return hist;
}

std::vector<double> Histogram::centers() const {
  std::vector<double> t(h_.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = center(i);
  return t;
}

std::size_t Histogram::bin_of(double x) const noexcept {
  if (!(x >= lo_) || !(x < hi())) return h_.size();
  const auto i = static_cast<std::size_t>((x - lo_) / dt_);
  return i < h_.size() ? i : h_.size() - 1;
}

Histogram from_samples(std::span<const double> samples, double lo, double hi, std::size_t n_bins) {
  if (n_bins < 2) fail(ErrorKind::InvalidArgument, "from_samples: need at least 2 bins");
  if (!(hi > lo)) fail(ErrorKind::InvalidArgument, "from_samples: need lo < hi");
  std::vector<double> counts(n_bins, 0.0);
  const double dt = (hi - lo) / static_cast<double>(n_bins);
  std::size_t kept = 0;
  for (double x : samples) {
    if (!(x >= lo) || !(x < hi)) continue;
    auto i = static_cast<std::size_t>((x - lo) / dt);
    if (i >= n_bins) i = n_bins - 1;
    counts[i] += 1.0;
    ++kept;
  }
  if (kept == 0) fail(ErrorKind::EmptyHistogram, "from_samples: no samples inside [lo, hi)");
  return Histogram::from_counts(counts, lo, hi);
}

Histogram normalize(std::span<const double> raw_counts, double lo, double hi) {
  return Histogram::from_counts(raw_counts, lo, hi);
}

void write_csv(const Histogram& hist, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "t,h\n" << std::setprecision(17);
  for (std::size_t i = 0; i < hist.size(); ++i) out << hist.center(i) << ',' << hist.density()[i] << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

namespace {

double parse_double(std::string_view field, const std::string& where) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    fail(ErrorKind::Format, where + ": cannot parse number '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

Histogram read_csv(const std::filesystem::path& path, const WarningSink& warn) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Format, path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,h") fail(ErrorKind::Format, path.string() + ": expected header 't,h'");

  std::vector<double> t, h;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    const std::string where = path.string() + ":" + std::to_string(row);
    if (comma == std::string::npos) fail(ErrorKind::Format, where + ": expected two columns");
    const std::string_view view(line);
    t.push_back(parse_double(view.substr(0, comma), where));
    h.push_back(parse_double(view.substr(comma + 1), where));
    if (h.back() < 0.0) fail(ErrorKind::Format, where + ": negative density");
  }
  if (t.size() < 2) fail(ErrorKind::Format, path.string() + ": need at least two rows");

  const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(dt > 0.0)) fail(ErrorKind::Format, path.string() + ": bin centers must be ascending");
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double step = t[i] - t[i - 1];
    if (std::abs(step - dt) > 1e-6 * dt) {
      fail(ErrorKind::Format, path.string() + ": non-uniform bin spacing at row " + std::to_string(i + 1));
    }
  }

  double mass = 0.0;
  for (double v : h) mass += v;
  mass *= dt;
  if (mass <= 0.0) fail(ErrorKind::EmptyHistogram, path.string() + ": histogram has no mass");
  if (std::abs(mass - 1.0) > 1e-6 && warn) {
    std::ostringstream msg;
    msg << path.string() << ": dt*sum(h) = " << mass << ", renormalizing";
    warn(msg.str());
  }
  const double lo = t.front() - 0.5 * dt;
  return Histogram::from_counts(h, lo, lo + dt * static_cast<double>(t.size()));
}

}  // namespace histoseg
