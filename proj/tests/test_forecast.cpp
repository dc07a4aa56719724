#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "syrisk/forecast.hpp"

using namespace syrisk;

namespace {

std::vector<double> stratified_normal(std::size_t n) {
  std::vector<double> r(n);
  for (std::size_t k = 0; k < n; ++k) r[k] = norm_quantile((k + 0.5) / n);
  return r;
}

FittedModel synthetic_model(std::size_t n, double df) {
  FittedModel m;
  m.resid_x = EmpiricalQuantiles(stratified_normal(n));
  m.resid_y = EmpiricalQuantiles(stratified_normal(n));
  m.copula.params.df = df;
  return m;
}

std::pair<Innovation, Innovation> default_innovations() {
  return {Innovation{dist::StdNormal{}, true}, Innovation{dist::StudentT{5.0}, true}};
}

LossSeries default_series(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return simulate_dgp({GarchParams{}, GarchParams{}}, GasCopulaParams{}, default_innovations(), n, rng)
      .series;
}

}  // namespace

TEST(ForecastVar, Examples) {
  // beta-quantile of {0.5, 1.0, 1.5, 2.0} at 0.7 is the third point
  EXPECT_DOUBLE_EQ(forecast_var(2.0, EmpiricalQuantiles({0.5, 1.0, 1.5, 2.0}), 0.7), 3.0);
  EXPECT_NEAR(forecast_var(1.3, EmpiricalQuantiles(stratified_normal(100000)), 0.95), 1.3 * 1.6449, 1e-3);
}

TEST(CovarLevel, Examples) {
  const RiskLevels l{0.95, 0.95};
  EXPECT_NEAR(solve_covar_level(Copula::gaussian(0.0), l), 0.95, 1e-10);
  EXPECT_NEAR(solve_covar_level(Copula::gaussian(0.8), l), norm_cdf(2.77), 5e-4);
  EXPECT_NEAR(solve_covar_level(Copula::gaussian(0.8), l), 0.9972, 5e-4);
  EXPECT_NEAR(solve_covar_level(Copula::gaussian(0.99999), l), 1 - 0.05 * 0.05, 1e-3);
  // independence with unequal levels
  EXPECT_NEAR(solve_covar_level(Copula::gaussian(0.0), RiskLevels{0.9, 0.99}), 0.9, 1e-10);
}

TEST(CovarLevel, SolvesTheSurvivalEquation) {
  for (const Copula c : {Copula::gaussian(0.5), Copula::student_t(0.3, 4.0), Copula::student_t(-0.4, 6.0)}) {
    const RiskLevels l{0.9, 0.95};
    const double u2 = solve_covar_level(c, l);
    EXPECT_NEAR(copula_survival(c, l.beta, u2), 0.1 * 0.05, 1e-9);
  }
}

TEST(CovarLevel, Monotone) {
  for (const double rho : {0.0, 0.3, 0.7}) {
    double prev = 0;
    for (double a = 0.5; a < 0.99; a += 0.05) {
      const double u = solve_covar_level(Copula::gaussian(rho), RiskLevels{a, 0.95});
      EXPECT_GT(u, prev);
      prev = u;
    }
  }
  for (const double df : {kInf, 5.0}) {
    double prev = 0;
    for (double rho = 0.0; rho < 0.96; rho += 0.05) {
      const double u = solve_covar_level(Copula{rho, df}, RiskLevels{0.95, 0.95});
      EXPECT_GE(u, prev - 1e-12);
      prev = u;
    }
  }
}

TEST(Systemic, GaussianPairValues) {
  const FittedModel m = synthetic_model(100000, kInf);
  const SystemicForecaster fc(m, RiskLevels{0.95, 0.95}, MeasureSet{true, true, true});
  const auto r = fc(PeriodState{1.0, 1.0, 0.8});
  EXPECT_NEAR(r.tuple.v, 1.6449, 1e-3);
  EXPECT_NEAR(*r.tuple.c, 2.77, 0.02);
  EXPECT_NEAR(*r.tuple.mu, 1.650, 0.02);
  // CoES of the Gaussian pair by direct quadrature, y-space
  EXPECT_NEAR(*r.tuple.e, 3.0863, 0.02);
  EXPECT_GE(*r.tuple.e, *r.tuple.c);
  // scale moves every measure
  const auto s = fc(PeriodState{2.0, 3.0, 0.8});
  EXPECT_NEAR(s.tuple.v, 2 * r.tuple.v, 1e-12);
  EXPECT_NEAR(*s.tuple.c, 3 * *r.tuple.c, 1e-12);
  EXPECT_NEAR(*s.tuple.e, 3 * *r.tuple.e, 1e-10);
  EXPECT_NEAR(*s.tuple.mu, 3 * *r.tuple.mu, 1e-10);
}

TEST(Systemic, IndependenceGivesMarginalQuantile) {
  RngStream rng(2, 0);
  std::vector<double> y;
  for (int i = 0; i < 5003; ++i) y.push_back(rng.student_t(5.0));
  FittedModel m = synthetic_model(5003, kInf);
  m.resid_y = EmpiricalQuantiles(y);
  const SystemicForecaster fc(m, RiskLevels{0.9, 0.95}, MeasureSet{true, true, true});
  const auto r = fc(PeriodState{1.0, 1.5, 0.0});
  EXPECT_NEAR(*r.tuple.c, 1.5 * m.resid_y.quantile(0.9), 1e-12);
  // MES under independence is the residual mean
  double mean = 0;
  for (double v : y) mean += v / y.size();
  EXPECT_NEAR(*r.tuple.mu, 1.5 * mean, 1e-6);
  // CoES under independence is the upper tail mean of the residuals
  const auto& s = m.resid_y.sorted();
  const std::size_t k = static_cast<std::size_t>(std::ceil(0.9 * s.size()));
  double tail = (k / double(s.size()) - 0.9) * s[k - 1];
  for (std::size_t i = k; i < s.size(); ++i) tail += s[i] / s.size();
  EXPECT_NEAR(*r.tuple.e, 1.5 * tail / 0.1, 1e-6);
}

TEST(Systemic, ClampsBeyondLargestResidual) {
  const FittedModel m = synthetic_model(10, kInf);
  const SystemicForecaster fc(m, RiskLevels{0.95, 0.95}, MeasureSet{true, false, false});
  const auto r = fc(PeriodState{1.0, 1.0, 0.8});
  EXPECT_DOUBLE_EQ(*r.tuple.c, m.resid_y.sorted().back());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Systemic, UnrequestedMeasuresAreEmpty) {
  const FittedModel m = synthetic_model(1000, 5.0);
  const SystemicForecaster fc(m, RiskLevels{0.95, 0.95}, MeasureSet{true, false, false});
  const auto r = fc(PeriodState{1.0, 1.0, 0.5});
  EXPECT_TRUE(r.tuple.c.has_value());
  EXPECT_FALSE(r.tuple.e.has_value());
  EXPECT_FALSE(r.tuple.mu.has_value());
}

TEST(Rolling, BookkeepingAndFixedWindow) {
  const LossSeries s = default_series(1100, 3);
  ForecastConfig cfg;
  cfg.window = 1000;
  cfg.refit_every = 0;
  cfg.measures = MeasureSet{true, true, true};
  const ModelSpec spec{GarchFamily::Garch, CopulaFamily::Gaussian};
  const auto r = rolling_forecast(s, cfg, spec);
  ASSERT_EQ(r.points.size(), 100u);
  EXPECT_EQ(r.fits, 1u);
  EXPECT_EQ(r.missing(), 0u);
  // fixed window: one fit on the first window, recursions continued
  const FittedModel m = fit_model(s.slice(0, 1000), spec);
  const SystemicForecaster fc(m, cfg.levels, cfg.measures);
  const auto states = fc.extend(s.slice(1000, 1100));
  for (std::size_t t = 0; t < 100; ++t) {
    EXPECT_EQ(r.points[t].index, 1000 + t);
    const auto f = fc(states[t]).tuple;
    EXPECT_EQ(r.points[t].forecast->v, f.v);
    EXPECT_EQ(*r.points[t].forecast->c, *f.c);
    EXPECT_EQ(*r.points[t].forecast->e, *f.e);
    EXPECT_EQ(*r.points[t].forecast->mu, *f.mu);
    EXPECT_GE(*f.e, *f.c);
  }
}

TEST(Rolling, DeterministicAcrossThreadCounts) {
  const LossSeries s = default_series(1060, 4);
  ForecastConfig cfg;
  cfg.window = 1000;
  cfg.refit_every = 30;
  const ModelSpec spec{GarchFamily::GjrGarch, CopulaFamily::StudentT};
  const auto a = rolling_forecast(s, cfg, spec);
  cfg.jobs = 2;
  const auto b = rolling_forecast(s, cfg, spec);
  ASSERT_EQ(a.points.size(), 60u);
  EXPECT_EQ(a.fits, 2u);
  for (std::size_t t = 0; t < 60; ++t) {
    EXPECT_EQ(a.points[t].forecast->v, b.points[t].forecast->v);
    EXPECT_EQ(*a.points[t].forecast->c, *b.points[t].forecast->c);
    EXPECT_EQ(*a.points[t].forecast->e, *b.points[t].forecast->e);
  }
}

TEST(Rolling, OneHomogeneous) {
  const LossSeries s = default_series(1020, 5);
  LossSeries scaled = s;
  const double lambda = 7.0;
  for (auto& v : scaled.x) v *= lambda;
  for (auto& v : scaled.y) v *= lambda;
  ForecastConfig cfg;
  cfg.window = 1000;
  cfg.refit_every = 0;
  cfg.measures = MeasureSet{true, true, true};
  const ModelSpec spec{GarchFamily::Garch, CopulaFamily::StudentT};
  const auto a = rolling_forecast(s, cfg, spec);
  const auto b = rolling_forecast(scaled, cfg, spec);
  for (std::size_t t = 0; t < a.points.size(); ++t) {
    const auto& fa = *a.points[t].forecast;
    const auto& fb = *b.points[t].forecast;
    EXPECT_NEAR(fb.v, lambda * fa.v, 1e-10 * std::max(1.0, std::abs(fb.v)));
    EXPECT_NEAR(*fb.c, lambda * *fa.c, 1e-10 * std::max(1.0, std::abs(*fb.c)));
    EXPECT_NEAR(*fb.e, lambda * *fa.e, 1e-10 * std::max(1.0, std::abs(*fb.e)));
    EXPECT_NEAR(*fb.mu, lambda * *fa.mu, 1e-10 * std::max(1.0, std::abs(*fb.mu)));
  }
}

TEST(Rolling, VarViolationRate) {
  const LossSeries s = default_series(3000, 6);
  ForecastConfig cfg;
  cfg.window = 1000;
  cfg.refit_every = 0;
  cfg.measures = MeasureSet{false, false, false};
  const auto r = rolling_forecast(s, cfg, ModelSpec{GarchFamily::Garch, CopulaFamily::Gaussian});
  std::size_t hits = 0;
  for (const auto& p : r.points) hits += s.x[p.index] > p.forecast->v;
  const double n = static_cast<double>(r.points.size());
  const double se = std::sqrt(0.05 * 0.95 / n);
  EXPECT_NEAR(hits / n, 0.05, 3 * se);
}

TEST(Rolling, Errors) {
  const LossSeries s = default_series(300, 7);
  ForecastConfig cfg;
  cfg.window = 400;
  EXPECT_THROW(rolling_forecast(s, cfg, ModelSpec{}), InsufficientDataError);
}
