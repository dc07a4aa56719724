#include "syrisk/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace syrisk {

std::string to_string(VarMode m) { return m == VarMode::DistinctVar ? "distinct-var" : "identical-var"; }
std::string to_string(Scenario s) { return s == Scenario::NullEqual ? "null-equal" : "alt-systemic"; }
std::string to_string(NullKind k) { return k == NullKind::Equal ? "equal" : "lex"; }

std::vector<ForecastTuple> contaminate(const std::vector<ForecastTuple>& forecasts, double shape,
                                       double scale, RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw DomainError("Weibull shape and scale must be positive");
  std::vector<ForecastTuple> out = forecasts;
  auto bump = [&](double& v, const char* what) {
    if (!(v > 0.0)) throw DomainError(std::string("contaminate: nonpositive ") + what + " forecast");
    v *= rng.weibull(shape, scale);
  };
  for (auto& f : out) {
    bump(f.v, "VaR");
    if (f.c) bump(*f.c, "CoVaR");
    if (f.e) bump(*f.e, "CoES");
    if (f.mu) bump(*f.mu, "MES");
  }
  return out;
}

double binomial_se(double p, std::size_t r) {
  return r == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(r));
}

namespace {

/// Runs body(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body) {
  jobs = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
}

enum class Outcome : signed char { Accept, Reject, Failed };

}  // namespace

// ------------------------------------------------------------------ DM study

void StudyConfig::validate() const {
  if (replications == 0) throw UsageError("replications must be positive");
  if (n.empty()) throw UsageError("at least one evaluation length is required");
  for (auto v : n)
    if (v < 10) throw UsageError("evaluation length must be at least 10");
  if (window < 250) throw UsageError("estimation window must be at least 250");
  for (auto f : functionals)
    if (f != Functional::VarCoVar && f != Functional::VarCoVarCoEs)
      throw UsageError("the study supports var-covar and var-covar-coes");
  if (!(nu > 0.0 && nu < 0.5)) throw UsageError("nu must lie in (0, 0.5)");
  levels.validate();
}

const StudyCell& StudyResult::cell(std::size_t n, Functional f, VarMode v, Scenario s,
                                   NullKind k) const {
  for (const auto& c : cells)
    if (c.n == n && c.functional == f && c.var_mode == v && c.scenario == s && c.null_kind == k)
      return c;
  throw DomainError("no such study cell");
}

namespace {

struct CellKey {
  std::size_t n;
  Functional functional;
  VarMode var_mode;
  Scenario scenario;
  NullKind null_kind;
};

std::vector<CellKey> study_cells(const StudyConfig& c) {
  std::vector<CellKey> keys;
  for (auto n : c.n)
    for (auto f : c.functionals)
      for (auto v : c.var_modes)
        for (auto s : c.scenarios)
          for (auto k : {NullKind::Equal, NullKind::Lex}) keys.push_back({n, f, v, s, k});
  return keys;
}

std::vector<ForecastTuple> select(const std::vector<ForecastTuple>& src, Functional f,
                                  std::size_t n) {
  std::vector<ForecastTuple> out(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(n));
  if (f == Functional::VarCoVar)
    for (auto& t : out) t.e.reset();
  return out;
}

/// Replace the VaR of `a` by the VaR of `b`, or the systemic part likewise.
std::vector<ForecastTuple> with_var_of(std::vector<ForecastTuple> a, const std::vector<ForecastTuple>& b) {
  for (std::size_t t = 0; t < a.size(); ++t) a[t].v = b[t].v;
  return a;
}

Outcome decide(const ScoreDiffSeries& d, VarMode v, NullKind k, double nu) {
  try {
    DmResult r;
    if (v == VarMode::IdenticalVar) {
      r = dm_degenerate(d, k == NullKind::Equal ? Side::TwoSided : Side::OneSided);
    } else if (k == NullKind::Equal) {
      r = dm_two_sided(d, hac_cov(d));
    } else {
      r = dm_one_half_sided(d, hac_cov(d));
    }
    if (!std::isfinite(r.p_value)) return Outcome::Failed;
    return r.p_value < nu ? Outcome::Reject : Outcome::Accept;
  } catch (const Error&) {
    return Outcome::Failed;
  }
}

}  // namespace

StudyResult run_mc_dm(const StudyConfig& config) {
  config.validate();
  const auto keys = study_cells(config);
  const std::size_t n_max = *std::max_element(config.n.begin(), config.n.end());
  const std::size_t R = config.replications;
  std::vector<std::vector<Outcome>> outcomes(R);
  std::vector<std::string> errors(R);

  ForecastConfig fc_config;
  fc_config.levels = config.levels;
  fc_config.measures = MeasureSet{true, true, false};

  parallel_for(R, config.jobs, [&](std::size_t rep) {
    RngStream rng = rng_stream(config.seed, rep);
    std::vector<ForecastTuple> clean;
    LossSeries oos;
    try {
      const auto sim = simulate_dgp({config.dgp.margin_x, config.dgp.margin_y}, config.dgp.copula,
                                    {config.dgp.innov_x, config.dgp.innov_y},
                                    config.window + n_max, rng);
      const FittedModel model = fit_model(sim.series.slice(0, config.window), config.model);
      const SystemicForecaster fc(model, config.levels, fc_config.measures);
      oos = sim.series.slice(config.window, config.window + n_max);
      const auto states = fc.extend(oos);
      clean.reserve(n_max);
      for (std::size_t t = 0; t < n_max; ++t) clean.push_back(fc(states[t]).tuple);
    } catch (const Error& e) {
      errors[rep] = e.what();
      outcomes[rep].assign(keys.size(), Outcome::Failed);
      return;
    }

    // independent noise for each (functional, VaR mode) column
    struct Column {
      std::vector<ForecastTuple> r1, r2;
    };
    std::vector<std::vector<Column>> cols(config.functionals.size(),
                                          std::vector<Column>(config.var_modes.size()));
    for (auto& row : cols)
      for (auto& col : row) {
        col.r1 = contaminate(clean, config.noise_shape, config.noise_scale, rng);
        col.r2 = contaminate(clean, config.noise_shape, config.noise_scale, rng);
      }
    auto index_of = [](const auto& v, auto x) {
      return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
    };

    outcomes[rep].resize(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const CellKey& k = keys[i];
      const Column& col = cols[index_of(config.functionals, k.functional)]
                             [index_of(config.var_modes, k.var_mode)];
      const auto r1 = select(col.r1, k.functional, k.n);
      std::vector<ForecastTuple> r2 = select(
          k.scenario == Scenario::NullEqual ? col.r2 : clean, k.functional, k.n);
      if (k.var_mode == VarMode::IdenticalVar) {
        r2 = with_var_of(std::move(r2), r1);
      } else if (k.scenario == Scenario::AltSystemic) {
        r2 = with_var_of(std::move(r2), select(col.r2, k.functional, k.n));
      }
      try {
        const auto d = score_diff_series(r1, r2, oos.slice(0, k.n), ScoreSpec::zero_hom(k.functional));
        outcomes[rep][i] = decide(d, k.var_mode, k.null_kind, config.nu);
      } catch (const Error&) {
        outcomes[rep][i] = Outcome::Failed;
      }
    }
  });

  StudyResult result;
  result.replications = R;
  for (std::size_t rep = 0; rep < R; ++rep)
    if (!errors[rep].empty()) {
      ++result.failed_replications;
      result.failure_messages.push_back("replication " + std::to_string(rep) + ": " + errors[rep]);
    }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    StudyCell c;
    c.n = keys[i].n;
    c.functional = keys[i].functional;
    c.var_mode = keys[i].var_mode;
    c.scenario = keys[i].scenario;
    c.null_kind = keys[i].null_kind;
    for (std::size_t rep = 0; rep < R; ++rep) {
      switch (outcomes[rep][i]) {
        case Outcome::Reject:
          ++c.rejections;
          ++c.valid;
          break;
        case Outcome::Accept:
          ++c.valid;
          break;
        case Outcome::Failed:
          ++c.failures;
          break;
      }
    }
    c.rate = c.valid ? static_cast<double>(c.rejections) / c.valid : 0.0;
    c.se = binomial_se(c.rate, c.valid);
    c.invalid = c.failures * 50 > R;
    result.cells.push_back(c);
  }
  return result;
}

// --------------------------------------------------------- calibration study

void CalibStudyConfig::validate() const {
  if (replications == 0) throw UsageError("replications must be positive");
  if (n.empty()) throw UsageError("at least one sample size is required");
  levels.validate();
  RiskLevels{alpha_mis, beta_mis}.validate();
  for (double a : alpha_grid) RiskLevels{a, beta_mis}.validate();
  if (!(sd_x > 0.0 && sd_y > 0.0) || !(std::abs(cov_xy) < sd_x * sd_y))
    throw UsageError("calibration study: covariance matrix must be positive definite");
}

CalibStudyResult run_mc_calibration(const CalibStudyConfig& config) {
  config.validate();
  const double rho = config.cov_xy / (config.sd_x * config.sd_y);
  const AnalyticBivariate law{Margin::normal(0.0, config.sd_x), Margin::normal(0.0, config.sd_y),
                              Copula::gaussian(rho)};
  auto forecast_at = [&](double a, double b) {
    ForecastTuple f;
    f.v = var_level(Bivariate{law}, b);
    f.c = systemic_measure(MeasureKind::CoVaR, law, RiskLevels{a, b});
    f.levels = config.levels;
    return f;
  };

  struct Spec {
    std::size_t n;
    double a, b;
    bool correct;
    IdVariant variant;
    bool curve;
    ForecastTuple f;
  };
  std::vector<Spec> specs;
  const ForecastTuple f_true = forecast_at(config.levels.alpha, config.levels.beta);
  const ForecastTuple f_mis = forecast_at(config.alpha_mis, config.beta_mis);
  for (auto n : config.n)
    for (bool correct : {true, false})
      for (auto v : {IdVariant::Strict, IdVariant::NonStrict})
        specs.push_back({n, correct ? config.levels.alpha : config.alpha_mis,
                         correct ? config.levels.beta : config.beta_mis, correct, v, false,
                         correct ? f_true : f_mis});
  const std::size_t n_max = *std::max_element(config.n.begin(), config.n.end());
  for (double a : config.alpha_grid) {
    const ForecastTuple f = forecast_at(a, config.beta_mis);
    for (auto v : {IdVariant::Strict, IdVariant::NonStrict})
      specs.push_back({n_max, a, config.beta_mis, false, v, true, f});
  }

  const std::size_t R = config.replications;
  std::vector<std::vector<Outcome>> outcomes(R, std::vector<Outcome>(specs.size()));
  const double b_xy = config.cov_xy / config.sd_x;
  const double s_res = std::sqrt(config.sd_y * config.sd_y - b_xy * b_xy);
  parallel_for(R, config.jobs, [&](std::size_t rep) {
    RngStream rng = rng_stream(config.seed, rep);
    LossSeries obs;
    obs.x.resize(n_max);
    obs.y.resize(n_max);
    for (std::size_t t = 0; t < n_max; ++t) {
      const double z1 = rng.normal(), z2 = rng.normal();
      obs.x[t] = config.sd_x * z1;
      obs.y[t] = b_xy * z1 + s_res * z2;
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& s = specs[i];
      try {
        const std::vector<ForecastTuple> fs(s.n, s.f);
        const auto r = calibration_test(fs, obs.slice(0, s.n), IdKind::VarCoVar, s.variant);
        outcomes[rep][i] = r.p_value < config.nu ? Outcome::Reject : Outcome::Accept;
      } catch (const Error&) {
        outcomes[rep][i] = Outcome::Failed;
      }
    }
  });

  CalibStudyResult result;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    CalibCell c;
    c.n = s.n;
    c.alpha_f = s.a;
    c.beta_f = s.b;
    c.correct = s.correct;
    c.variant = s.variant;
    c.var_forecast = s.f.v;
    c.covar_forecast = *s.f.c;
    for (std::size_t rep = 0; rep < R; ++rep) {
      if (outcomes[rep][i] == Outcome::Failed) {
        ++result.failures;
        continue;
      }
      ++c.valid;
      if (outcomes[rep][i] == Outcome::Reject) ++c.rejections;
    }
    c.rate = c.valid ? static_cast<double>(c.rejections) / c.valid : 0.0;
    c.se = binomial_se(c.rate, c.valid);
    (s.curve ? result.curve : result.table).push_back(c);
  }
  return result;
}

// ------------------------------------------------------------- small studies

DmNullResult run_dm_null(std::size_t replications, std::size_t n, std::uint64_t seed, double nu) {
  if (replications == 0 || n < 2) throw UsageError("run_dm_null: need replications and n >= 2");
  std::vector<double> stats(replications);
  std::size_t rejections = 0;
  const double crit = quantile(dist::ChiSq{2}, 1.0 - nu);
  for (std::size_t rep = 0; rep < replications; ++rep) {
    RngStream rng = rng_stream(seed, rep);
    ScoreDiffSeries d;
    d.d.resize(n);
    for (auto& v : d.d) v = {rng.normal(), rng.normal()};
    stats[rep] = dm_two_sided(d, hac_cov(d)).statistic;
    if (stats[rep] > crit) ++rejections;
  }
  std::sort(stats.begin(), stats.end());
  double ks = 0.0;
  const double R = static_cast<double>(replications);
  for (std::size_t i = 0; i < replications; ++i) {
    const double F = -std::expm1(-0.5 * stats[i]);
    ks = std::max({ks, std::abs(F - i / R), std::abs((i + 1) / R - F)});
  }
  return {static_cast<double>(rejections) / R, ks, replications};
}

std::vector<LevelAdjustment> level_table(const std::vector<double>& nus) {
  std::vector<LevelAdjustment> out;
  out.reserve(nus.size());
  for (double nu : nus) out.push_back(adjust_level(nu));
  return out;
}

CxlsReport cxls_report(double rho, const RiskLevels& levels, MixtureRule rule) {
  const Bivariate f0 = AnalyticBivariate{Margin::normal(-1.0), Margin::normal(), Copula::gaussian(rho)};
  const Bivariate f1 = AnalyticBivariate{Margin::normal(1.0), Margin::normal(), Copula::gaussian(rho)};
  CxlsReport r;
  r.rho = rho;
  r.levels = levels;
  r.rule = rule;
  const auto var = cxls_probe(MeasureKind::VaR, f0, f1, 0.5, levels, rule);
  r.var_f0 = var.value_f0;
  r.var_f1 = var.value_f1;
  r.var_mix = var.value_mix;
  r.covar = cxls_probe(MeasureKind::CoVaR, f0, f1, 0.5, levels, rule);
  r.coes = cxls_probe(MeasureKind::CoES, f0, f1, 0.5, levels, rule);
  r.mes = cxls_probe(MeasureKind::MES, f0, f1, 0.5, levels, rule);
  if (rho != 0.0) {
    r.mes_coef_f0 = r.mes.value_f0 / rho;
    r.mes_coef_mix = r.mes.value_mix / rho;
  }
  return r;
}

}  // namespace syrisk
