#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "syrisk/measures.hpp"
#include "syrisk/models.hpp"
#include "syrisk/scoring.hpp"
#include "syrisk/series.hpp"

namespace syrisk {

struct MeasureSet {
  bool covar = true;
  bool coes = true;
  bool mes = false;
};

struct ForecastConfig {
  RiskLevels levels;
  std::size_t window = 1000;
  /// Refit every k periods; 0 keeps the first fit for the whole sample.
  std::size_t refit_every = 1;
  MeasureSet measures;
  unsigned jobs = 1;

  void validate() const;
};

/// u2 with P(U1 > beta, U2 > u2) = (1 - alpha)(1 - beta).
double solve_covar_level(const Copula& copula, const RiskLevels& levels);

/// sigma * (empirical beta-quantile of the residuals).
double forecast_var(double sigma, const EmpiricalQuantiles& resid, double beta);

/// Conditional scale and dependence for one period.
struct PeriodState {
  double sigma_x;
  double sigma_y;
  double rho;
};

struct SystemicForecast {
  ForecastTuple tuple;
  std::vector<std::string> warnings;
};

/// Forecasts from one fitted model. Holds precomputed copula tables, so
/// reuse one instance across periods.
class SystemicForecaster {
 public:
  SystemicForecaster(const FittedModel& model, const RiskLevels& levels, MeasureSet measures);

  SystemicForecast operator()(const PeriodState& s) const;
  /// State for in-sample period t (0..n, n being the first period after the window).
  PeriodState in_sample_state(std::size_t t) const;
  /// States for periods following the window, continuing the recursions
  /// over the given observations; returns oos.size() + 1 states.
  std::vector<PeriodState> extend(const LossSeries& oos) const;
  /// Conditional exceedance level of Y, i.e. solve_covar_level at rho.
  double covar_level(double rho) const;

  const FittedModel& model() const { return model_; }

 private:
  /// 1 - S(beta, u2) / (1 - beta): the gamma at which CoVaR_gamma sits at u2.
  double gamma_of(double rho, double z2) const;
  double latent_grid(std::size_t k) const;

  const FittedModel& model_;
  RiskLevels levels_;
  MeasureSet measures_;
  UpperTailSection section_;
  std::vector<double> grid_;  // latent quantiles of k/n, k = 1..n-1
};

/// One-shot helper: forecasts for in-sample period t of a fitted model.
SystemicForecast forecast_systemic(const FittedModel& model, std::size_t t,
                                   const RiskLevels& levels, MeasureSet measures);

struct RollingPoint {
  std::size_t index;  // position in the input series
  std::string date;
  std::optional<ForecastTuple> forecast;  // empty when the window fit failed
  std::vector<std::string> warnings;
};

struct RollingResult {
  std::vector<RollingPoint> points;
  std::size_t fits = 0;
  std::size_t failed_fits = 0;
  std::size_t missing() const;
};

RollingResult rolling_forecast(const LossSeries& series, const ForecastConfig& config,
                               const ModelSpec& spec);

}  // namespace syrisk
