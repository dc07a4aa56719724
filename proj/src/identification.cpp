#include "syrisk/identification.hpp"

#include <cmath>

namespace syrisk {

namespace {

double need(const std::optional<double>& v, const char* name) {
  if (!v) throw DomainError(std::string("forecast is missing the ") + name + " component");
  return *v;
}

}  // namespace

IdValue identify(IdKind kind, const ForecastTuple& f, Obs obs) {
  const double alpha = f.levels.alpha;
  const double beta = f.levels.beta;
  const bool tail = obs.x > f.v;
  IdValue out{(tail ? 0.0 : 1.0) - beta};
  if (kind == IdKind::VaR) return out;
  if (kind == IdKind::VarMes) {
    const double mu = need(f.mu, "MES");
    out.push_back(tail ? mu - obs.y : 0.0);
    return out;
  }
  const double c = need(f.c, "CoVaR");
  const bool below = obs.y <= c;
  out.push_back(tail ? (below ? 1.0 : 0.0) - alpha : 0.0);
  if (kind == IdKind::VarCoVarCoEs) {
    const double e = need(f.e, "CoES");
    const double t = ((below ? 0.0 : obs.y) + c * ((below ? 1.0 : 0.0) - alpha)) / (1.0 - alpha);
    out.push_back(tail ? e - t : 0.0);
  }
  return out;
}

double identify_nonstrict(double v, double c, Obs obs, const RiskLevels& levels) {
  const double joint = (obs.x > v && obs.y > c) ? 1.0 : 0.0;
  return joint - (1.0 - levels.alpha) * (1.0 - levels.beta);
}

CalibResult calibration_test(const std::vector<ForecastTuple>& forecasts, const LossSeries& obs,
                             IdKind kind, IdVariant variant,
                             const std::optional<std::vector<std::vector<double>>>& instruments) {
  obs.validate();
  const std::size_t n = forecasts.size();
  if (obs.size() != n) throw DataError("calibration_test: forecasts and observations differ in length");
  if (instruments && instruments->size() != n)
    throw DataError("calibration_test: one instrument vector per period is required");
  if (variant == IdVariant::NonStrict && kind != IdKind::VarCoVar)
    throw DomainError("the joint-exceedance baseline only covers (VaR, CoVaR)");

  const std::size_t ell = instruments && n > 0 ? (*instruments)[0].size() : 1;
  if (ell == 0) throw DataError("calibration_test: empty instrument vector");
  std::size_t dim_v = 1;
  if (variant == IdVariant::Strict) {
    dim_v = kind == IdKind::VaR ? 1 : kind == IdKind::VarCoVarCoEs ? 3 : 2;
  }
  const std::size_t dim = dim_v * ell;
  if (n < 2 * dim) throw InsufficientDataError("calibration_test: need at least 2*dof periods");

  Eigen::MatrixXd z(n, dim);
  for (std::size_t t = 0; t < n; ++t) {
    IdValue v;
    if (variant == IdVariant::Strict) {
      v = identify(kind, forecasts[t], obs[t]);
    } else {
      v = {identify_nonstrict(forecasts[t].v, need(forecasts[t].c, "CoVaR"), obs[t],
                              forecasts[t].levels)};
    }
    for (std::size_t i = 0; i < dim_v; ++i) {
      for (std::size_t j = 0; j < ell; ++j) {
        double phi = 1.0;
        if (instruments) {
          const auto& row = (*instruments)[t];
          if (row.size() != ell) throw DataError("calibration_test: ragged instruments");
          phi = row[j];
        }
        z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i * ell + j)) = v[i] * phi;
      }
    }
  }
  if (!z.allFinite()) throw NumericError("calibration_test: non-finite identification values");

  CalibResult r;
  r.dof = static_cast<int>(dim);
  r.mean_id = z.colwise().mean().transpose();
  const Eigen::MatrixXd centered = z.rowwise() - r.mean_id.transpose();
  r.cov = centered.transpose() * centered / static_cast<double>(n);

  const double trace = r.cov.trace();
  if (trace <= 0.0) {
    // Every period carries the same identification value; the mean is
    // either exactly zero or known without sampling error.
    const bool zero = r.mean_id.cwiseAbs().maxCoeff() == 0.0;
    r.statistic = zero ? 0.0 : kInf;
    r.p_value = zero ? 1.0 : 0.0;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r.cov);
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * r.mean_id;
  double stat = 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < proj.size(); ++i) {
    const double lam = eig.eigenvalues()(i);
    if (lam <= 1e-10 * trace) continue;
    ++rank;
    stat += proj(i) * proj(i) / lam;
  }
  r.rank_deficient = rank < r.dof;
  r.dof = rank;
  r.statistic = static_cast<double>(n) * stat;
  r.p_value = 1.0 - chi2_cdf(static_cast<double>(rank), r.statistic);
  return r;
}

}  // namespace syrisk
