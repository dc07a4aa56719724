#include "syrisk/forecast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace syrisk {

void ForecastConfig::validate() const {
  levels.validate();
  if (window < 250) throw UsageError("forecast window must be at least 250");
  if (jobs == 0) throw UsageError("jobs must be positive");
}

double solve_covar_level(const Copula& copula, const RiskLevels& levels) {
  validate(copula);
  levels.validate();
  const double target = (1.0 - levels.alpha) * (1.0 - levels.beta);
  const UpperTailSection s(levels.beta, copula.df);
  return find_root([&](double u2) { return s(copula.rho, u2) - target; }, 1e-12, 1.0 - 1e-12,
                   1e-14);
}

double forecast_var(double sigma, const EmpiricalQuantiles& resid, double beta) {
  if (!(sigma > 0.0)) throw DomainError("forecast_var: volatility must be positive");
  return sigma * resid.quantile(beta);
}

namespace {

double latent(double df, double u) {
  return std::isinf(df) ? norm_quantile(u) : t_quantile(df, u);
}

}  // namespace

SystemicForecaster::SystemicForecaster(const FittedModel& model, const RiskLevels& levels,
                                       MeasureSet measures)
    : model_(model),
      levels_(levels),
      measures_(measures),
      section_((levels.validate(), levels.beta), model.copula.params.df) {
  const std::size_t n = model.resid_y.size();
  const double df = model.copula.params.df;
  grid_.resize(n > 0 ? n - 1 : 0);
  for (std::size_t k = 1; k < n; ++k) {
    const double u = static_cast<double>(k) / n;
    // mirror the lower half for symmetric tails
    grid_[k - 1] = u > 0.5 ? -latent(df, 1.0 - u) : latent(df, u);
  }
}

double SystemicForecaster::latent_grid(std::size_t k) const { return grid_[k - 1]; }

double SystemicForecaster::gamma_of(double rho, double z2) const {
  return 1.0 - section_.from_latent(rho, z2) / (1.0 - levels_.beta);
}

double SystemicForecaster::covar_level(double rho) const {
  const double target = (1.0 - levels_.alpha) * (1.0 - levels_.beta);
  return find_root([&](double u2) { return section_(rho, u2) - target; }, 1e-12, 1.0 - 1e-12,
                   1e-14);
}

SystemicForecast SystemicForecaster::operator()(const PeriodState& s) const {
  if (!(s.sigma_x > 0.0) || !(s.sigma_y > 0.0)) throw NumericError("nonpositive volatility");
  if (!(std::abs(s.rho) < 1.0)) throw NumericError("correlation outside (-1, 1)");
  SystemicForecast out;
  auto& f = out.tuple;
  f.levels = levels_;
  f.v = forecast_var(s.sigma_x, model_.resid_x, levels_.beta);
  if (!measures_.covar && !measures_.coes && !measures_.mes) return out;

  const auto& ys = model_.resid_y.sorted();
  const std::size_t n = ys.size();
  // gamma at the step boundaries k/n; gamma(0) = 0 and gamma(1) = 1
  auto gamma_k = [&](std::size_t k) {
    if (k == 0) return 0.0;
    if (k >= n) return 1.0;
    return gamma_of(s.rho, latent_grid(k));
  };

  const double alpha = levels_.alpha;
  if (measures_.covar || measures_.coes) {
    const double u2 = covar_level(s.rho);
    if (u2 > static_cast<double>(n) / (n + 1))
      out.warnings.push_back("CoVaR level beyond the residual range; clamped to the largest residual");
    f.c = s.sigma_y * model_.resid_y.quantile(u2);
  }
  if (measures_.coes) {
    double acc = 0.0;
    double hi = 1.0;
    for (std::size_t k = n; k >= 1; --k) {
      const double lo = gamma_k(k - 1);
      acc += ys[k - 1] * (hi - std::max(lo, alpha));
      if (lo <= alpha) break;
      hi = lo;
    }
    f.e = s.sigma_y * acc / (1.0 - alpha);
  }
  if (measures_.mes) {
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const double g = gamma_k(k);
      acc += ys[k - 1] * (g - prev);
      prev = g;
    }
    f.mu = s.sigma_y * acc;
  }
  return out;
}

PeriodState SystemicForecaster::in_sample_state(std::size_t t) const {
  if (t >= model_.x.sigma.size()) throw DomainError("period outside the fitted paths");
  return {model_.x.sigma[t], model_.y.sigma[t], model_.copula.path.rho[t]};
}

std::vector<PeriodState> SystemicForecaster::extend(const LossSeries& oos) const {
  oos.validate();
  const auto& gx = model_.x.params;
  const auto& gy = model_.y.params;
  const auto& cp = model_.copula.params;
  const double n_in = static_cast<double>(model_.resid_x.size());
  const double lo = 1.0 / (n_in + 1.0), hi = n_in / (n_in + 1.0);
  auto pit = [&](const EmpiricalQuantiles& e, double r) {
    return std::clamp(e.cdf(r) * n_in / (n_in + 1.0), lo, hi);
  };
  auto step = [](const GarchParams& g, double s2, double z) {
    double a = g.alpha;
    if (g.family == GarchFamily::GjrGarch && z > 0.0) a += g.leverage;
    return g.omega + a * z * z + g.beta * s2;
  };

  std::vector<PeriodState> out;
  out.reserve(oos.size() + 1);
  double sx = model_.x.sigma.back(), sy = model_.y.sigma.back();
  double f = model_.copula.path.f.back();
  out.push_back({sx, sy, gas_link(f)});
  for (std::size_t t = 0; t < oos.size(); ++t) {
    const double u1 = pit(model_.resid_x, oos.x[t] / sx);
    const double u2 = pit(model_.resid_y, oos.y[t] / sy);
    const double s = cp.alpha == 0.0 ? 0.0 : gas_score(cp, f, u1, u2);
    f = std::clamp(cp.omega + cp.alpha * s + cp.beta * f, -50.0, 50.0);
    sx = std::sqrt(step(gx, sx * sx, oos.x[t]));
    sy = std::sqrt(step(gy, sy * sy, oos.y[t]));
    out.push_back({sx, sy, gas_link(f)});
  }
  return out;
}

SystemicForecast forecast_systemic(const FittedModel& model, std::size_t t,
                                   const RiskLevels& levels, MeasureSet measures) {
  const SystemicForecaster fc(model, levels, measures);
  return fc(fc.in_sample_state(t));
}

std::size_t RollingResult::missing() const {
  return static_cast<std::size_t>(std::count_if(
      points.begin(), points.end(), [](const RollingPoint& p) { return !p.forecast; }));
}

RollingResult rolling_forecast(const LossSeries& series, const ForecastConfig& config,
                               const ModelSpec& spec) {
  config.validate();
  series.validate();
  const std::size_t n = series.size();
  if (n <= config.window)
    throw InsufficientDataError("series must be longer than the estimation window");

  struct Block {
    std::size_t begin, end;
  };
  std::vector<Block> blocks;
  const std::size_t step = config.refit_every == 0 ? n : config.refit_every;
  for (std::size_t b = config.window; b < n; b += step) blocks.push_back({b, std::min(b + step, n)});

  RollingResult result;
  result.points.resize(n - config.window);
  for (std::size_t t = config.window; t < n; ++t) {
    auto& p = result.points[t - config.window];
    p.index = t;
    if (!series.dates.empty()) p.date = series.dates[t];
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < blocks.size(); i = next++) {
      const Block b = blocks[i];
      try {
        const FittedModel model = fit_model(series.slice(b.begin - config.window, b.begin), spec);
        const SystemicForecaster fc(model, config.levels, config.measures);
        const auto states = fc.extend(series.slice(b.begin, b.end));
        for (std::size_t t = b.begin; t < b.end; ++t) {
          auto& p = result.points[t - config.window];
          try {
            auto sf = fc(states[t - b.begin]);
            p.forecast = sf.tuple;
            p.warnings = std::move(sf.warnings);
          } catch (const Error& e) {
            p.warnings.push_back(e.what());
          }
        }
      } catch (const Error& e) {
        ++failed;
        for (std::size_t t = b.begin; t < b.end; ++t)
          result.points[t - config.window].warnings.push_back(std::string("fit failed: ") +
                                                              e.what());
      }
    }
  };
  const unsigned jobs = std::min<std::size_t>(config.jobs, blocks.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  result.fits = blocks.size();
  result.failed_fits = failed;
  return result;
}

}  // namespace syrisk
