#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "syrisk/scoring.hpp"
#include "syrisk/series.hpp"

namespace syrisk {

enum class IdKind { VaR, VarCoVar, VarCoVarCoEs, VarMes };

using IdValue = std::vector<double>;

/// Strict identification function; the first component is 1{x <= v} - beta.
IdValue identify(IdKind kind, const ForecastTuple& f, Obs obs);

/// One-dimensional joint-exceedance baseline 1{x > v}1{y > c} - (1-alpha)(1-beta).
double identify_nonstrict(double v, double c, Obs obs, const RiskLevels& levels);

enum class IdVariant { Strict, NonStrict };

struct CalibResult {
  double statistic = 0.0;
  int dof = 0;  // rank of the covariance; below the dimension when it is singular
  double p_value = 1.0;
  Eigen::VectorXd mean_id;
  Eigen::MatrixXd cov;
  bool rank_deficient = false;
};

/// Wald test of E[V] = 0 (or E[phi_{t-1} V] = 0 with instruments). Each
/// instrument vector multiplies every identification component. A singular
/// covariance is inverted on its range (eigenvalues above 1e-10 * trace) and
/// the degrees of freedom drop to its rank.
CalibResult calibration_test(const std::vector<ForecastTuple>& forecasts, const LossSeries& obs,
                             IdKind kind, IdVariant variant,
                             const std::optional<std::vector<std::vector<double>>>& instruments =
                                 std::nullopt);

}  // namespace syrisk
