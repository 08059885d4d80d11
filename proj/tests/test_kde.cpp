#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "histoseg/errors.hpp"
#include "histoseg/histogram.hpp"
#include "histoseg/kde.hpp"
#include "histoseg/numerics.hpp"

using namespace histoseg;

namespace {

KdeModel random_model(std::uint64_t seed, std::size_t n, double var) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double dt = 0.1;
  std::vector<double> c(n), w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = -0.5 * dt * double(n) + (double(i) + 0.5) * dt;
    w[i] = u(rng);
    sum += w[i];
  }
  for (double& x : w) x /= sum * dt;
  return KdeModel(c, w, var, dt);
}

Histogram sampled_histogram(std::uint64_t seed, std::size_t n_samples, std::size_t bins) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n_samples);
  for (double& v : x) v = u(rng) < 0.4 ? -2.0 + 0.7 * g(rng) : 1.5 + g(rng);
  return from_samples(x, -6.0, 6.0, bins);
}

}  // namespace

TEST_CASE("gaussian") {
  CHECK(gaussian(0.0, 0.0, 1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(gaussian(2.3, 1.0, 0.7) == doctest::Approx(gaussian(-0.3, 1.0, 0.7)).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian(0.0, 0.0, 0.0), Error);
  CHECK_THROWS_AS(gaussian(0.0, 0.0, -1.0), Error);

  const double v = 0.37, sd = std::sqrt(v);
  const std::size_t m = 200000;
  double acc = 0.0;
  const double h = 20.0 * sd / double(m);
  for (std::size_t i = 0; i <= m; ++i) {
    const double t = -10.0 * sd + double(i) * h;
    acc += (i == 0 || i == m ? 0.5 : 1.0) * gaussian(t, 0.0, v);
  }
  CHECK(std::abs(acc * h - 1.0) < 1e-9);
}

TEST_CASE("model invariants are enforced") {
  const std::vector<double> c{0.0, 1.0}, w{0.5, 0.5};
  CHECK_NOTHROW(KdeModel(c, w, 1.0, 1.0));
  CHECK_THROWS_AS(KdeModel(c, w, 0.0, 1.0), Error);
  CHECK_THROWS_AS(KdeModel(c, std::vector<double>{0.7, 0.5}, 1.0, 1.0), Error);
  CHECK_THROWS_AS(KdeModel(c, std::vector<double>{1.5, -0.5}, 1.0, 1.0), Error);
  CHECK_THROWS_AS(KdeModel(c, std::vector<double>{1.0}, 1.0, 1.0), Error);
}

TEST_CASE("single weight evaluates to one gaussian") {
  const double dt = 0.25;
  std::vector<double> c(9), w(9, 0.0);
  for (std::size_t i = 0; i < 9; ++i) c[i] = -1.0 + double(i) * dt;
  w[3] = 1.0 / dt;
  const KdeModel m(c, w, 0.3, dt);
  for (double t : {-2.0, -0.25, 0.0, 1.7}) CHECK(evaluate(m, t) == doctest::Approx(gaussian(t, c[3], 0.3)).epsilon(1e-14));
  CHECK(std::abs(derivative1(m, c[3])) < 1e-12);
  CHECK(derivative2(m, c[3]) == doctest::Approx(-gaussian(0.0, 0.0, 0.3) * dt * w[3] / 0.3).epsilon(1e-13));
  CHECK(derivative2(m, c[3]) < 0.0);
}

TEST_CASE("model integrates to one") {
  const auto m = random_model(1, 80, 0.2);
  const double lo = -14.0, hi = 14.0;
  const std::size_t k = 200000;
  const double h = (hi - lo) / double(k);
  double acc = 0.0;
  for (std::size_t i = 0; i <= k; ++i) acc += (i == 0 || i == k ? 0.5 : 1.0) * evaluate(m, lo + double(i) * h);
  CHECK(std::abs(acc * h - 1.0) < 1e-6);
}

TEST_CASE("analytic derivatives match central differences") {
  const auto m = random_model(2, 60, 0.3);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.5, 3.5);
  const double step = 1e-6 * std::sqrt(m.variance());
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    const double fd1 = (evaluate(m, t + step) - evaluate(m, t - step)) / (2.0 * step);
    const double fd2 = (derivative1(m, t + step) - derivative1(m, t - step)) / (2.0 * step);
    const double a1 = derivative1(m, t), a2 = derivative2(m, t);
    CHECK(std::abs(a1 - fd1) <= 1e-5 * std::max(std::abs(a1), 1e-3));
    CHECK(std::abs(a2 - fd2) <= 1e-5 * std::max(std::abs(a2), 1e-3));
  }
}

TEST_CASE("at_scale") {
  const auto m = random_model(3, 40, 0.2);
  const auto same = at_scale(m, 0.0);
  CHECK(same.variance() == m.variance());
  const auto ab = at_scale(at_scale(m, 0.3), -0.1);
  const auto direct = at_scale(m, 0.2);
  CHECK(ab.variance() == doctest::Approx(direct.variance()).epsilon(1e-15));
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(ab.weights()[i] == m.weights()[i]);
    CHECK(ab.centers()[i] == m.centers()[i]);
  }
  CHECK(m.variance() == 0.2);
  try {
    at_scale(m, -0.2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ScaleUnderflow);
  }
}

TEST_CASE("at_scale equals numeric gaussian convolution") {
  const auto m = random_model(4, 40, 0.15);
  const double delta = 0.35;
  const double dx = 0.005;
  const std::size_t n = 4801, c = 2400;  // [-12, 12]
  std::vector<double> f(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (double(i) - double(c)) * dx;
    f[i] = evaluate(m, t);
    g[i] = gaussian(t, 0.0, delta);
  }
  const auto conv = linear_convolve(f, g, c);
  const auto shifted = at_scale(m, delta);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(conv[i] * dx - evaluate(shifted, (double(i) - double(c)) * dx)));
  CHECK(err < 1e-6);
}

TEST_CASE("em: initial state and per-iteration invariants") {
  const auto hist = sampled_histogram(5, 5000, 120);
  EmSolver solver(hist, {});
  CHECK(solver.variance() == doctest::Approx(hist.dt()));
  for (double w : solver.weights()) CHECK(w == doctest::Approx(1.0 / (120 * hist.dt())));
  for (int it = 0; it < 50; ++it) {
    solver.step();
    double sum = 0.0;
    for (double w : solver.weights()) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(std::abs(sum * hist.dt() - 1.0) < 1e-12);
    CHECK(solver.variance() > 0.0);
  }
}

TEST_CASE("em: KL divergence is non-increasing with a fixed bandwidth") {
  EmConfig config;
  config.update_variance = false;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto hist = sampled_histogram(100 + seed, 3000, 100);
    EmSolver solver(hist, config);
    double prev = solver.kl_divergence();
    for (int it = 0; it < 200; ++it) {
      solver.step();
      const double kl = solver.kl_divergence();
      CHECK(kl <= prev + 1e-10);
      prev = kl;
    }
  }
}

TEST_CASE("em: a histogram generated by the model is a fixed point") {
  // Weights supported away from the edges so the kernel never truncates.
  const std::size_t n = 200;
  const double lo = -10.0, hi = 10.0, dt = (hi - lo) / double(n), var = 0.4;
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 60; i < 140; ++i) w[i] = 1.0 + 0.5 * std::sin(0.3 * double(i));
  double sum = 0.0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum * dt;

  const std::vector<double> flat(n, 1.0);
  EmSolver probe(Histogram::from_counts(flat, lo, hi), {});
  probe.reset(w, var);
  const auto generated = probe.model_on_grid();

  for (bool update : {false, true}) {
    EmConfig config;
    config.update_variance = update;
    EmSolver solver(Histogram::from_counts(generated, lo, hi), config);
    solver.reset(w, var);
    solver.step();
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(solver.weights()[i] - w[i]) < 1e-10);
    CHECK(solver.variance() == doctest::Approx(var).epsilon(1e-10));
  }
}

TEST_CASE("em: sampled standard normal beats the raw histogram") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::vector<double> x(100000);
  for (double& v : x) v = g(rng);
  const auto hist = from_samples(x, -8.0, 8.0, 400);
  const auto fit = em_fit(hist);
  double e_model = 0.0, e_hist = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double t = hist.center(i), f = gaussian(t, 0.0, 1.0);
    e_model += std::pow(evaluate(fit.model, t) - f, 2) * hist.dt();
    e_hist += std::pow(hist.density()[i] - f, 2) * hist.dt();
  }
  CHECK(std::sqrt(e_model) <= 2.0 * std::sqrt(e_hist));
}

TEST_CASE("em: smooth three-mode density is reproduced") {
  const std::size_t n = 200;
  const double lo = -10.0, hi = 10.0, dt = (hi - lo) / double(n);
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = lo + (double(i) + 0.5) * dt;
    raw[i] = (gaussian(t, -5.0, 0.36) + gaussian(t, 0.0, 0.36) + gaussian(t, 5.0, 0.36)) / 3.0;
  }
  const auto hist = Histogram::from_counts(raw, lo, hi);
  const auto fit = em_fit(hist);
  CHECK(fit.final_residual < 1e-3);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(evaluate(fit.model, hist.center(i)) - hist.density()[i]));
  CHECK(err < 1e-3);
}

TEST_CASE("em: iteration cap reports non-convergence") {
  const auto hist = sampled_histogram(6, 2000, 80);
  EmConfig config;
  config.max_iterations = 5;
  const auto fit = em_fit(hist, config, true);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 5);
  CHECK(fit.trace.size() == 5);
  CHECK(fit.trace.front().iteration == 1);
  double sum = 0.0;
  for (double w : fit.model.weights()) sum += w;
  CHECK(std::abs(sum * fit.model.dt() - 1.0) < 1e-8);
}

TEST_CASE("em: printed and corrected bandwidth rules differ") {
  const auto hist = sampled_histogram(7, 4000, 100);
  EmConfig a, b;
  a.max_iterations = b.max_iterations = 1;
  b.variance_rule = VarianceRule::AsPrinted;
  const auto fa = em_fit(hist, a), fb = em_fit(hist, b);
  CHECK(fb.model.variance() == doctest::Approx(fa.model.variance() * hist.dt()).epsilon(1e-12));
}

TEST_CASE("em: deterministic") {
  const auto hist = sampled_histogram(8, 3000, 90);
  EmConfig config;
  config.max_iterations = 300;
  const auto a = em_fit(hist, config), b = em_fit(hist, config);
  CHECK(a.model.variance() == b.model.variance());
  for (std::size_t i = 0; i < hist.size(); ++i) CHECK(a.model.weights()[i] == b.model.weights()[i]);
}
