#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "syrisk/dm.hpp"
#include "syrisk/forecast.hpp"
#include "syrisk/identification.hpp"
#include "syrisk/measures.hpp"
#include "syrisk/models.hpp"

namespace syrisk {

/// Multiply every reported component by an independent Weibull(shape, scale) draw.
std::vector<ForecastTuple> contaminate(const std::vector<ForecastTuple>& forecasts, double shape,
                                       double scale, RngStream& rng);

enum class VarMode { DistinctVar, IdenticalVar };
enum class Scenario { NullEqual, AltSystemic };
/// Which null a cell tests: equal predictive ability, or the lexicographic
/// "second forecast not better" null.
enum class NullKind { Equal, Lex };

std::string to_string(VarMode m);
std::string to_string(Scenario s);
std::string to_string(NullKind k);

struct DgpSpec {
  GarchParams margin_x;
  GarchParams margin_y;
  GasCopulaParams copula;
  Innovation innov_x;
  Innovation innov_y{dist::StudentT{5.0}, true};
};

struct StudyConfig {
  std::size_t replications = 1000;
  std::vector<std::size_t> n = {500, 1000};
  std::size_t window = 1000;
  RiskLevels levels;
  std::uint64_t seed = 1;
  std::vector<Functional> functionals = {Functional::VarCoVar, Functional::VarCoVarCoEs};
  std::vector<VarMode> var_modes = {VarMode::IdenticalVar, VarMode::DistinctVar};
  std::vector<Scenario> scenarios = {Scenario::NullEqual, Scenario::AltSystemic};
  unsigned jobs = 1;
  double nu = 0.05;
  double noise_shape = 10.0;
  double noise_scale = 0.3;
  DgpSpec dgp;
  ModelSpec model;

  void validate() const;
};

struct StudyCell {
  std::size_t n = 0;
  Functional functional = Functional::VarCoVar;
  VarMode var_mode = VarMode::DistinctVar;
  Scenario scenario = Scenario::NullEqual;
  NullKind null_kind = NullKind::Equal;
  std::size_t rejections = 0;
  std::size_t valid = 0;
  std::size_t failures = 0;  // replications whose test could not be computed
  double rate = 0.0;
  double se = 0.0;
  bool invalid = false;  // more than 2% of replications failed
};

struct StudyResult {
  std::vector<StudyCell> cells;
  std::size_t replications = 0;
  std::size_t failed_replications = 0;
  std::vector<std::string> failure_messages;

  const StudyCell& cell(std::size_t n, Functional f, VarMode v, Scenario s, NullKind k) const;
};

/// Binomial standard error sqrt(p(1-p)/R).
double binomial_se(double p, std::size_t r);

StudyResult run_mc_dm(const StudyConfig& config);

// ------------------------------------------------------- calibration study

struct CalibStudyConfig {
  std::size_t replications = 1000;
  std::vector<std::size_t> n = {500, 1000};
  RiskLevels levels;
  /// Misspecified forecast levels; (0.75, 0.99) keeps the joint exceedance
  /// probability of the nominal levels.
  double alpha_mis = 0.75;
  double beta_mis = 0.99;
  /// alpha' values for the power curve (computed at the largest n).
  std::vector<double> alpha_grid;
  double sd_x = 1.0;
  double sd_y = std::sqrt(2.0);
  double cov_xy = 0.5;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  double nu = 0.05;

  void validate() const;
};

struct CalibCell {
  std::size_t n = 0;
  double alpha_f = 0.0;  // levels at which the forecasts were computed
  double beta_f = 0.0;
  bool correct = true;
  IdVariant variant = IdVariant::Strict;
  std::size_t rejections = 0;
  std::size_t valid = 0;
  double rate = 0.0;
  double se = 0.0;
  double var_forecast = 0.0;
  double covar_forecast = 0.0;
};

struct CalibStudyResult {
  std::vector<CalibCell> table;  // correct / misspecified at each n
  std::vector<CalibCell> curve;  // alpha' grid at the largest n
  std::size_t failures = 0;
};

CalibStudyResult run_mc_calibration(const CalibStudyConfig& config);

// ---------------------------------------------------------- small studies

/// Rejection rate and Kolmogorov distance from chi-square(2) of the two-sided
/// statistic for i.i.d. standard bivariate normal differences.
struct DmNullResult {
  double rejection_rate = 0.0;
  double ks_distance = 0.0;
  std::size_t replications = 0;
};

DmNullResult run_dm_null(std::size_t replications, std::size_t n, std::uint64_t seed,
                         double nu = 0.05);

std::vector<LevelAdjustment> level_table(const std::vector<double>& nus = {0.01, 0.05, 0.10});

struct CxlsReport {
  double rho = 0.8;
  RiskLevels levels;
  MixtureRule rule = MixtureRule::Conditional;
  double var_f0 = 0.0, var_f1 = 0.0, var_mix = 0.0;
  CxlsResult covar{};
  CxlsResult coes{};
  CxlsResult mes{};
  double mes_coef_f0 = 0.0;   // MES / rho
  double mes_coef_mix = 0.0;
};

/// Mixture of two shifted bivariate normals, X shifted by -1 and +1.
CxlsReport cxls_report(double rho = 0.8, const RiskLevels& levels = {},
                       MixtureRule rule = MixtureRule::Conditional);

}  // namespace syrisk
