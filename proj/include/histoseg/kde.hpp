#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "histoseg/histogram.hpp"
#include "histoseg/numerics.hpp"

namespace histoseg {

/// Normal density N(t; mu, var). Throws InvalidArgument for var <= 0.
double gaussian(double t, double mu, double var);

// Kernel-density model: one Gaussian per histogram bin, all sharing one
// variance,
//   KD(t) = dt * sum_j w_j N(t; c_j, var),   dt * sum_j w_j == 1.
class KdeModel {
 public:
  KdeModel() = default;
  /// Throws InvalidArgument when the invariants do not hold (mass within
  /// 1e-8, var > 0, non-negative weights, one weight per center).
  KdeModel(std::vector<double> centers, std::vector<double> weights, double variance, double dt);

  std::span<const double> centers() const noexcept { return centers_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double variance() const noexcept { return variance_; }
  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return centers_.size(); }

 private:
  std::vector<double> centers_;
  std::vector<double> weights_;
  double variance_ = 1.0;
  double dt_ = 1.0;
};

double evaluate(const KdeModel& model, double t);
double derivative1(const KdeModel& model, double t);
double derivative2(const KdeModel& model, double t);

/// Same model at variance var + dsigma2; negative offsets sharpen it.
/// Throws ScaleUnderflow when the result would be <= 0.
KdeModel at_scale(const KdeModel& model, double dsigma2);

enum class VarianceRule {
  /// sigma2' = dt * sum_i B_i conv(D, V)_i with V = offset^2 * G; keeps
  /// sigma2 fixed when D == 1.
  Corrected,
  /// The same expression multiplied by the current sigma2.
  AsPrinted,
};

struct EmConfig {
  double delta = 1e-6;
  std::size_t max_iterations = 10000;
  double division_floor = 1e-12;
  bool update_variance = true;
  VarianceRule variance_rule = VarianceRule::Corrected;
};

struct EmTraceRow {
  std::size_t iteration;
  double residual;
  double sigma2;
};

struct EmResult {
  KdeModel model;
  std::size_t iterations = 0;
  /// max_i |h_i - KD(t_i)| for the returned model.
  double final_residual = 0.0;
  /// Convergence ratio sum |B' - B| / B at the last iteration.
  double final_change = 0.0;
  bool converged = false;
  std::vector<EmTraceRow> trace;
};

/// Working state of the deconvolution loop. Exposed so that single
/// iterations can be inspected; em_fit drives it to convergence.
class EmSolver {
 public:
  EmSolver(const Histogram& hist, EmConfig config);

  /// Starts from explicit weights and variance instead of the flat default.
  void reset(std::vector<double> weights, double variance);

  /// One update of weights (and variance when enabled). Returns the
  /// convergence ratio for the step.
  double step();

  /// Model values at the bin centers for the current state, evaluated with
  /// the discrete kernel.
  std::vector<double> model_on_grid() const;

  /// max_i |h_i - KD(t_i)| for the weights before the last step().
  double last_residual() const noexcept { return last_residual_; }

  /// Sum over h_i > 0 of dt * h_i * log(h_i / KD(t_i)).
  double kl_divergence() const;

  std::span<const double> weights() const noexcept { return weights_; }
  double variance() const noexcept { return variance_; }
  /// Set when a variance update produced a non-positive or non-finite value;
  /// the previous variance is kept.
  bool variance_collapsed() const noexcept { return variance_collapsed_; }
  KdeModel model() const;

 private:
  void build_kernels() const;

  EmConfig config_;
  std::vector<double> h_;
  double dt_;
  std::vector<double> centers_;
  std::vector<double> weights_;
  double variance_;
  // Kernel samples G and V on the bin grid, origin at the middle sample.
  mutable std::vector<double> g_, v_;
  mutable std::vector<std::complex<double>> g_hat_, v_hat_;
  mutable double cached_variance_ = -1.0;
  LinearConvolver conv_;
  // Scratch buffers reused across steps.
  std::vector<double> denom_, ratio_, back_g_, back_v_;
  double last_residual_ = 0.0;
  bool variance_collapsed_ = false;
};

/// Expectation-maximization deconvolution of the histogram into a KdeModel.
/// Hitting max_iterations is reported through `converged`, not thrown.
EmResult em_fit(const Histogram& hist, const EmConfig& config = {}, bool record_trace = false);

/// Writes `iteration,residual,sigma2` rows.
void write_em_trace(const std::vector<EmTraceRow>& trace, const std::filesystem::path& path);

}  // namespace histoseg
