#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "syrisk/models.hpp"

using namespace syrisk;

namespace {

std::pair<Innovation, Innovation> default_innovations() {
  return {Innovation{dist::StdNormal{}, true}, Innovation{dist::StudentT{5.0}, true}};
}

SimulatedPath default_path(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return simulate_dgp({GarchParams{}, GarchParams{}}, GasCopulaParams{}, default_innovations(), n, rng);
}

double variance(const std::vector<double>& v) {
  double m = 0, s = 0;
  for (double x : v) m += x / v.size();
  for (double x : v) s += (x - m) * (x - m) / v.size();
  return s;
}

// Gaussian copula log-density derivative in f under rho = tanh(f/2)
double gaussian_score(double f, double u1, double u2) {
  const double rho = std::tanh(f / 2);
  const double a = norm_quantile(u1), b = norm_quantile(u2);
  const double q = 1 - rho * rho;
  const double dl = rho / q + (a * b * (1 + rho * rho) - rho * (a * a + b * b)) / (q * q);
  return dl * q / 2;
}

}  // namespace

TEST(Link, Bijection) {
  EXPECT_EQ(gas_link(0.0), 0.0);
  double prev = -1.0;
  for (double f = -30; f <= 30; f += 0.25) {
    const double r = gas_link(f);
    EXPECT_GT(r, prev);
    EXPECT_LT(std::abs(r), 1.0);
    EXPECT_NEAR(gas_link(-f), -r, 1e-15);
    EXPECT_NEAR(r, (1 - std::exp(-f)) / (1 + std::exp(-f)), 1e-14);
    if (std::abs(f) < 15) EXPECT_NEAR(gas_link_inverse(r), f, 1e-8 * (1 + std::abs(f)));
    prev = r;
  }
  EXPECT_THROW(gas_link_inverse(1.0), DomainError);
}

// With (0.001, 0.2, 0.79) and normal shocks 3a^2 + 2ab + b^2 = 1.06 > 1, so
// x has no fourth moment and the sample variance of one 1e5 path does not
// concentrate; this check is kept as stated and is expected to fail for
// most seeds.
TEST(Simulate, LongRunVariance) {
  const auto p = default_path(100000, 1);
  EXPECT_NEAR(variance(p.series.x) / 0.1, 1.0, 0.1);
  EXPECT_EQ(p.series.size(), 100000u);
  for (double r : p.rho) EXPECT_LT(std::abs(r), 1.0);
}

TEST(Simulate, LongRunVarianceFiniteKurtosis) {
  // 3a^2 + 2ab + b^2 = 0.9225: the sample variance is root-n consistent
  RngStream rng(1, 0);
  GarchParams g;
  g.omega = 0.005;
  g.alpha = 0.1;
  g.beta = 0.85;
  const auto p = simulate_dgp({g, g}, GasCopulaParams{}, default_innovations(), 100000, rng);
  EXPECT_NEAR(variance(p.series.x) / 0.1, 1.0, 0.1);
  EXPECT_NEAR(variance(p.series.y) / 0.1, 1.0, 0.1);
}

TEST(Simulate, ConstantCorrelationWithoutDynamics) {
  RngStream rng(2, 0);
  GasCopulaParams c;
  c.omega = 0.7;
  c.alpha = 0;
  c.beta = 0;
  const auto p = simulate_dgp({GarchParams{}, GarchParams{}}, c, default_innovations(), 500, rng);
  for (double r : p.rho) EXPECT_NEAR(r, gas_link(0.7), 1e-15);
}

TEST(Simulate, Reproducible) {
  const auto a = default_path(2000, 9), b = default_path(2000, 9), c = default_path(2000, 10);
  EXPECT_EQ(a.series.x, b.series.x);
  EXPECT_EQ(a.series.y, b.series.y);
  EXPECT_NE(a.series.x, c.series.x);
}

TEST(Simulate, NonstationaryWarns) {
  RngStream rng(3, 0);
  GarchParams g;
  g.alpha = 0.3;
  g.beta = 0.75;
  const auto p = simulate_dgp({g, GarchParams{}}, GasCopulaParams{}, default_innovations(), 100, rng);
  EXPECT_FALSE(p.warnings.empty());
  EXPECT_EQ(p.series.size(), 100u);
}

TEST(Garch, GjrWithoutLeverageMatchesGarch) {
  const auto p = default_path(1000, 4);
  GarchParams g;
  GarchParams j = g;
  j.family = GarchFamily::GjrGarch;
  j.leverage = 0.0;
  EXPECT_EQ(garch_variance_path(g, p.series.x, 0.1), garch_variance_path(j, p.series.x, 0.1));
}

TEST(Garch, LeverageTriggersOnPositiveLosses) {
  GarchParams j;
  j.family = GarchFamily::GjrGarch;
  j.leverage = 0.1;
  const auto up = garch_variance_path(j, {1.0}, 0.1);
  const auto down = garch_variance_path(j, {-1.0}, 0.1);
  EXPECT_NEAR(up[1], 0.001 + 0.3 + 0.79 * 0.1, 1e-15);
  EXPECT_NEAR(down[1], 0.001 + 0.2 + 0.79 * 0.1, 1e-15);
}

TEST(FitMarginal, WhiteNoiseLimit) {
  RngStream rng(5, 0);
  std::vector<double> z;
  for (int i = 0; i < 2000; ++i) z.push_back(0.3 * rng.normal());
  const auto f = fit_marginal(z, GarchFamily::Garch);
  const double pers = f.params.alpha + f.params.beta;
  const double uncond = f.params.omega / (1 - pers);
  EXPECT_NEAR(uncond / variance(z), 1.0, 0.1);
  EXPECT_LT(f.params.alpha, 0.1);
  ASSERT_EQ(f.sigma.size(), z.size() + 1);
  for (double s : f.sigma) EXPECT_GT(s, 0.0);
  for (std::size_t t = 0; t < z.size(); ++t) EXPECT_NEAR(f.resid[t], z[t] / f.sigma[t], 1e-15);
  EXPECT_NEAR(f.sigma2_init, variance(z), 1e-12);
}

TEST(FitMarginal, DeterministicAndMonotoneTrace) {
  const auto p = default_path(1500, 6);
  const auto a = fit_marginal(p.series.x, GarchFamily::GjrGarch);
  const auto b = fit_marginal(p.series.x, GarchFamily::GjrGarch);
  EXPECT_EQ(a.params.omega, b.params.omega);
  EXPECT_EQ(a.params.alpha, b.params.alpha);
  EXPECT_EQ(a.params.beta, b.params.beta);
  EXPECT_EQ(a.params.leverage, b.params.leverage);
  ASSERT_FALSE(a.trace.empty());
  for (std::size_t i = 1; i < a.trace.size(); ++i) EXPECT_GE(a.trace[i], a.trace[i - 1]);
  EXPECT_GE(a.loglik, garch_qml_loglik(GarchParams{}, p.series.x, a.sigma2_init) - 1e-8);
}

TEST(FitMarginal, StationaryPoint) {
  const auto p = default_path(1500, 6);
  const auto f = fit_marginal(p.series.x, GarchFamily::Garch);
  ASSERT_LT(f.params.persistence(), 0.999);
  // first-order conditions in (omega, alpha, beta) by central differences
  for (int k = 0; k < 3; ++k) {
    auto at = [&](double d) {
      GarchParams q = f.params;
      (k == 0 ? q.omega : k == 1 ? q.alpha : q.beta) *= 1 + d;
      return garch_qml_loglik(q, p.series.x, f.sigma2_init);
    };
    const double g = (at(1e-5) - at(-1e-5)) / 2e-5;
    EXPECT_NEAR(g, 0.0, 1e-4);
  }
}

TEST(FitMarginal, ScaleEquivariance) {
  const auto p = default_path(1000, 7);
  std::vector<double> scaled;
  for (double v : p.series.x) scaled.push_back(10 * v);
  const auto a = fit_marginal(p.series.x, GarchFamily::Garch);
  const auto b = fit_marginal(scaled, GarchFamily::Garch);
  EXPECT_NEAR(b.params.omega, 100 * a.params.omega, 1e-10 * b.params.omega);
  EXPECT_NEAR(b.params.alpha, a.params.alpha, 1e-10);
  EXPECT_NEAR(b.sigma.back(), 10 * a.sigma.back(), 1e-10 * b.sigma.back());
}

TEST(FitMarginal, Errors) {
  EXPECT_THROW(fit_marginal(std::vector<double>(300, 1.0), GarchFamily::Garch), DomainError);
  EXPECT_THROW(fit_marginal(std::vector<double>(100, 1.0), GarchFamily::Garch), InsufficientDataError);
}

TEST(Pit, Properties) {
  RngStream rng(8, 0);
  std::vector<double> r;
  for (int i = 0; i < 1000; ++i) r.push_back(rng.uniform());
  const auto u = pit_transform(r);
  double mx = 0;
  for (int i = 0; i < 1000; ++i) {
    mx = std::max(mx, u[i]);
    for (int k = i + 1; k < std::min(1000, i + 20); ++k) EXPECT_EQ(r[i] < r[k], u[i] < u[k]);
  }
  EXPECT_NEAR(mx, 1000.0 / 1001.0, 1e-15);
  std::vector<double> s = u;
  std::sort(s.begin(), s.end());
  double ks = 0;
  std::sort(r.begin(), r.end());
  for (int i = 0; i < 1000; ++i)
    ks = std::max({ks, std::abs(r[i] - i / 1000.0), std::abs(r[i] - (i + 1) / 1000.0)});
  EXPECT_LT(ks, 0.05);
  for (int i = 0; i < 1000; ++i) EXPECT_NEAR(s[i], (i + 1) / 1001.0, 1e-15);
}

TEST(Gas, FrozenDynamics) {
  GasCopulaParams p;
  p.omega = 0.4;
  p.alpha = 0;
  p.beta = 0;
  const auto g = gas_filter(p, {0.2, 0.9, 0.5}, {0.3, 0.8, 0.1});
  for (double f : g.f) EXPECT_EQ(f, 0.4);
}

TEST(Gas, OneStepByHand) {
  GasCopulaParams p;
  p.df = kInf;
  const double f0 = p.omega / (1 - p.beta);
  const auto g = gas_filter(p, {0.9, 0.3}, {0.85, 0.6});
  ASSERT_EQ(g.f.size(), 3u);
  EXPECT_NEAR(g.f[0], f0, 1e-15);
  const double f1 = p.omega + p.alpha * gaussian_score(f0, 0.9, 0.85) + p.beta * f0;
  EXPECT_NEAR(g.f[1], f1, 1e-8);
  EXPECT_NEAR(gas_score(p, f0, 0.9, 0.85), gaussian_score(f0, 0.9, 0.85), 1e-8);
  EXPECT_NEAR(g.rho[1], std::tanh(g.f[1] / 2), 1e-15);
}

TEST(Gas, Causal) {
  const auto p = default_path(400, 11);
  std::vector<double> u1 = pit_transform(p.series.x), u2 = pit_transform(p.series.y);
  const auto a = gas_filter(GasCopulaParams{}, u1, u2);
  u1[200] = 0.01;
  u2[200] = 0.99;
  const auto b = gas_filter(GasCopulaParams{}, u1, u2);
  for (std::size_t t = 0; t <= 200; ++t) EXPECT_EQ(a.f[t], b.f[t]);
  EXPECT_NE(a.f[201], b.f[201]);
  for (double r : a.rho) EXPECT_LT(std::abs(r), 1.0);
}

TEST(FitCopula, IndependentGaussian) {
  RngStream rng(12, 0);
  std::vector<double> u1, u2;
  for (int i = 0; i < 1000; ++i) u1.push_back(rng.uniform()), u2.push_back(rng.uniform());
  const auto f = fit_copula(u1, u2, CopulaFamily::Gaussian);
  EXPECT_TRUE(std::isinf(f.params.df));
  const double uncond = gas_link(f.params.omega / (1 - f.params.beta));
  EXPECT_NEAR(uncond, 0.0, 0.05);
}

TEST(FitCopula, BeatsTrueParametersOnSample) {
  const auto p = default_path(1000, 13);
  const auto u1 = pit_transform(p.series.x), u2 = pit_transform(p.series.y);
  const auto f = fit_copula(u1, u2, CopulaFamily::StudentT);
  EXPECT_GE(f.loglik, gas_copula_loglik(GasCopulaParams{}, u1, u2) - 1e-8);
  EXPECT_NEAR(f.loglik, gas_copula_loglik(f.params, u1, u2), 1e-8 * std::abs(f.loglik));
}

TEST(FitModel, PipelineShapes) {
  const auto p = default_path(600, 14);
  const auto m = fit_model(p.series, ModelSpec{GarchFamily::Garch, CopulaFamily::Gaussian});
  EXPECT_EQ(m.x.sigma.size(), 601u);
  EXPECT_EQ(m.copula.path.rho.size(), 601u);
  EXPECT_EQ(m.resid_x.size(), 600u);
  EXPECT_NEAR(m.loglik, m.x.loglik + m.y.loglik + m.copula.loglik, 1e-8 * std::abs(m.loglik));
}
