#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "syrisk/scoring.hpp"
#include "syrisk/series.hpp"

namespace syrisk {

/// Per-period differences d_t = S(r1_t, obs_t) - S(r2_t, obs_t).
struct ScoreDiffSeries {
  std::vector<MoScore> d;
  std::size_t n() const { return d.size(); }
  MoScore mean() const;
};

enum class Kernel { Flat, Bartlett };

struct HacEstimate {
  double s11 = 0.0;
  double s12 = 0.0;
  double s22 = 0.0;
  int m = 0;
  Kernel kernel = Kernel::Flat;
  bool repaired = false;
};

enum class Hypothesis { TwoSided, OneHalfSided, Degenerate };
enum class TrafficZone { Green, Yellow, Orange, Red, Grey };
enum class Side { TwoSided, OneSided };

std::string to_string(TrafficZone z);
std::string to_string(Hypothesis h);
std::string to_string(Kernel k);

struct DmResult {
  double statistic = 0.0;
  double p_value = 1.0;
  MoScore dbar;
  HacEstimate omega;
  Hypothesis hypothesis = Hypothesis::TwoSided;
  std::optional<TrafficZone> zone;
  std::size_t n = 0;
};

struct LevelAdjustment {
  double nu;
  double nu_tilde;
  double chi2_crit;
  double nu_prime;
};

ScoreDiffSeries score_diff_series(const std::vector<ForecastTuple>& f1,
                                  const std::vector<ForecastTuple>& f2, const LossSeries& obs,
                                  const ScoreSpec& spec);

/// Long-run covariance of the mean differences, 1/n normalised.
HacEstimate hac_cov(const ScoreDiffSeries& diffs, int m = 0, Kernel kernel = Kernel::Flat);

/// Eigenvalue floor at 1e-12 * trace. Throws when the matrix is zero.
HacEstimate repair_psd(const HacEstimate& omega);

/// n dbar' Omega^{-1} dbar against chi-square(2).
DmResult dm_two_sided(const ScoreDiffSeries& diffs, const HacEstimate& omega);

/// Test of equal VaR scores with a non-worse systemic component for the
/// second forecast. p-value inverts the size-corrected level equation.
DmResult dm_one_half_sided(const ScoreDiffSeries& diffs, const HacEstimate& omega);

/// p-value of the one-and-a-half-sided statistic.
double one_half_sided_pvalue(double statistic);

LevelAdjustment adjust_level(double nu);

/// t-test on the second component alone, for identical VaR forecasts.
DmResult dm_degenerate(const ScoreDiffSeries& diffs, Side side, int m = 0,
                       Kernel kernel = Kernel::Flat);

TrafficZone classify_zone(MoScore dbar, const HacEstimate& omega, std::size_t n, double nu = 0.05);

}  // namespace syrisk
