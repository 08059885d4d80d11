#include "histoseg/kde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <string>

#include "histoseg/errors.hpp"
#include "histoseg/simd.hpp"

namespace histoseg {

double gaussian(double t, double mu, double var) {
  if (!(var > 0.0)) fail(ErrorKind::InvalidArgument, "gaussian: variance must be positive");
  const double z = t - mu;
  return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

KdeModel::KdeModel(std::vector<double> centers, std::vector<double> weights, double variance, double dt)
    : centers_(std::move(centers)), weights_(std::move(weights)), variance_(variance), dt_(dt) {
  if (centers_.size() != weights_.size() || centers_.empty()) {
    fail(ErrorKind::InvalidArgument, "KdeModel: need one weight per center");
  }
  if (!(variance_ > 0.0) || !std::isfinite(variance_)) fail(ErrorKind::InvalidArgument, "KdeModel: variance must be positive");
  if (!(dt_ > 0.0)) fail(ErrorKind::InvalidArgument, "KdeModel: dt must be positive");
  double mass = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorKind::InvalidArgument, "KdeModel: weights must be finite and >= 0");
    mass += w;
  }
  if (std::abs(mass * dt_ - 1.0) > 1e-8) {
    fail(ErrorKind::InvalidArgument, "KdeModel: dt * sum(weights) = " + std::to_string(mass * dt_) + ", expected 1");
  }
}

double evaluate(const KdeModel& model, double t) {
  return model.dt() * simd::mixture_sums(model.centers(), model.weights(), t, model.variance()).s0;
}

double derivative1(const KdeModel& model, double t) {
  const auto s = simd::mixture_sums(model.centers(), model.weights(), t, model.variance());
  return -model.dt() * s.s1 / model.variance();
}

double derivative2(const KdeModel& model, double t) {
  const double var = model.variance();
  const auto s = simd::mixture_sums(model.centers(), model.weights(), t, var);
  return model.dt() * (s.s2 - var * s.s0) / (var * var);
}

KdeModel at_scale(const KdeModel& model, double dsigma2) {
  const double var = model.variance() + dsigma2;
  if (!(var > 0.0)) {
    fail(ErrorKind::ScaleUnderflow, "at_scale: variance " + std::to_string(model.variance()) + " + " +
                                        std::to_string(dsigma2) + " is not positive");
  }
  return KdeModel({model.centers().begin(), model.centers().end()},
                  {model.weights().begin(), model.weights().end()}, var, model.dt());
}

EmSolver::EmSolver(const Histogram& hist, EmConfig config)
    : config_(config),
      h_(hist.density().begin(), hist.density().end()),
      dt_(hist.dt()),
      centers_(hist.centers()),
      variance_(hist.dt()),
      conv_(hist.size(), hist.size() / 2) {
  if (!(config_.delta > 0.0) || config_.max_iterations == 0 || !(config_.division_floor > 0.0)) {
    fail(ErrorKind::InvalidArgument, "EmConfig: delta, max_iterations and division_floor must be positive");
  }
  double mass = 0.0;
  for (double v : h_) mass += v;
  if (!(mass > 0.0)) fail(ErrorKind::InvalidArgument, "em_fit: histogram has zero mass");
  const std::size_t n = h_.size();
  weights_.assign(n, 1.0 / (static_cast<double>(n) * dt_));
  denom_.resize(n);
  ratio_.resize(n);
  back_g_.resize(n);
  back_v_.resize(n);
}

void EmSolver::reset(std::vector<double> weights, double variance) {
  if (weights.size() != h_.size()) fail(ErrorKind::InvalidArgument, "EmSolver::reset: weight count mismatch");
  if (!(variance > 0.0)) fail(ErrorKind::InvalidArgument, "EmSolver::reset: variance must be positive");
  weights_ = std::move(weights);
  variance_ = variance;
}

void EmSolver::build_kernels() const {
  if (variance_ == cached_variance_) return;
  const std::size_t n = h_.size();
  const auto center = static_cast<std::ptrdiff_t>(n / 2);
  g_.resize(n);
  v_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double offset = static_cast<double>(static_cast<std::ptrdiff_t>(k) - center) * dt_;
    g_[k] = gaussian(offset, 0.0, variance_);
    v_[k] = offset * offset * g_[k];
  }
  if (config_.update_variance) {
    conv_.kernel_spectra(g_, v_, g_hat_, v_hat_);
  } else {
    g_hat_ = conv_.kernel_spectrum(g_);
  }
  cached_variance_ = variance_;
}

double EmSolver::step() {
  build_kernels();
  const std::size_t n = h_.size();

  conv_.convolve(weights_, g_hat_, denom_);
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    residual = std::max(residual, std::abs(h_[i] - dt_ * denom_[i]));
    ratio_[i] = h_[i] / std::max(denom_[i], config_.division_floor);
  }
  last_residual_ = residual;

  if (config_.update_variance) {
    conv_.convolve2(ratio_, g_hat_, v_hat_, back_g_, back_v_);
  } else {
    conv_.convolve(ratio_, g_hat_, back_g_);
  }

  double next_variance = variance_;
  if (config_.update_variance) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += weights_[i] * back_v_[i];
    next_variance = dt_ * acc;
    if (config_.variance_rule == VarianceRule::AsPrinted) next_variance *= variance_;
  }

  std::vector<double> next(n);
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Transform round-off can leave tiny negative values where the true
    // product is zero.
    next[i] = std::max(0.0, weights_[i] * back_g_[i]);
    mass += next[i];
  }
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    fail(ErrorKind::InvalidArgument, "em_fit: weights lost all mass");
  }
  const double scale = 1.0 / (dt_ * mass);
  double change = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    next[i] *= scale;
    if (weights_[i] >= config_.division_floor) change += std::abs(next[i] - weights_[i]) / weights_[i];
  }
  weights_ = std::move(next);
  if (next_variance > 0.0 && std::isfinite(next_variance)) {
    variance_ = next_variance;
  } else {
    variance_collapsed_ = true;
  }
  return change;
}

std::vector<double> EmSolver::model_on_grid() const {
  build_kernels();
  std::vector<double> out(h_.size());
  conv_.convolve(weights_, g_hat_, out);
  for (double& v : out) v = std::max(v * dt_, 0.0);  // transform round-off
  return out;
}

double EmSolver::kl_divergence() const {
  const auto model = model_on_grid();
  double kl = 0.0;
  for (std::size_t i = 0; i < h_.size(); ++i) {
    if (h_[i] > 0.0) kl += dt_ * h_[i] * std::log(h_[i] / std::max(model[i], config_.division_floor * dt_));
  }
  return kl;
}

KdeModel EmSolver::model() const { return KdeModel(centers_, weights_, variance_, dt_); }

EmResult em_fit(const Histogram& hist, const EmConfig& config, bool record_trace) {
  EmSolver solver(hist, config);
  EmResult result;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    const double change = solver.step();
    result.iterations = it;
    result.final_change = change;
    if (record_trace) result.trace.push_back({it, solver.last_residual(), solver.variance()});
    if (solver.variance_collapsed()) break;
    if (change < config.delta) {
      result.converged = true;
      break;
    }
  }
  const auto grid = solver.model_on_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    result.final_residual = std::max(result.final_residual, std::abs(hist.density()[i] - grid[i]));
  }
  result.model = solver.model();
  return result;
}

void write_em_trace(const std::vector<EmTraceRow>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "iteration,residual,sigma2\n" << std::setprecision(17);
  for (const auto& row : trace) out << row.iteration << ',' << row.residual << ',' << row.sigma2 << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace histoseg
