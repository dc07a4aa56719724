#include "syrisk/dm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace syrisk {

namespace {

// per-component mean that is exact when the component is constant, so that
// constant differences give an exactly zero covariance
double component_mean(const std::vector<MoScore>& d, double MoScore::*field) {
  const double first = d.front().*field;
  double sum = 0.0;
  bool constant = true;
  for (const auto& v : d) {
    sum += v.*field;
    constant = constant && v.*field == first;
  }
  return constant ? first : sum / static_cast<double>(d.size());
}

}  // namespace

MoScore ScoreDiffSeries::mean() const {
  if (d.empty()) return {};
  return {component_mean(d, &MoScore::s1), component_mean(d, &MoScore::s2)};
}

std::string to_string(TrafficZone z) {
  switch (z) {
    case TrafficZone::Green:
      return "Green";
    case TrafficZone::Yellow:
      return "Yellow";
    case TrafficZone::Orange:
      return "Orange";
    case TrafficZone::Red:
      return "Red";
    case TrafficZone::Grey:
      return "Grey";
  }
  return "?";
}

std::string to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::TwoSided:
      return "two-sided";
    case Hypothesis::OneHalfSided:
      return "one-and-a-half-sided";
    case Hypothesis::Degenerate:
      return "degenerate";
  }
  return "?";
}

std::string to_string(Kernel k) { return k == Kernel::Flat ? "flat" : "bartlett"; }

ScoreDiffSeries score_diff_series(const std::vector<ForecastTuple>& f1,
                                  const std::vector<ForecastTuple>& f2, const LossSeries& obs,
                                  const ScoreSpec& spec) {
  obs.validate();
  const std::size_t n = obs.size();
  if (f1.size() != n || f2.size() != n)
    throw DataError("score differences: forecasts and observations differ in length");
  if (n < 2) throw InsufficientDataError("score differences: need at least two periods");
  ScoreDiffSeries out;
  out.d.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (f1[t].levels.alpha != f2[t].levels.alpha || f1[t].levels.beta != f2[t].levels.beta) {
      std::ostringstream os;
      os << "score differences: risk levels differ at period " << t;
      throw DataError(os.str());
    }
    out.d.push_back(mo_score(f1[t], obs[t], spec, t) - mo_score(f2[t], obs[t], spec, t));
  }
  return out;
}

HacEstimate hac_cov(const ScoreDiffSeries& diffs, int m, Kernel kernel) {
  const std::size_t n = diffs.n();
  if (n <= 1) throw InsufficientDataError("HAC covariance: need at least two periods");
  if (m < 0 || static_cast<std::size_t>(m) >= n)
    throw DomainError("HAC covariance: lag truncation must satisfy 0 <= m < n");
  const MoScore mu = diffs.mean();
  std::vector<double> a(n), b(n);
  for (std::size_t t = 0; t < n; ++t) {
    a[t] = diffs.d[t].s1 - mu.s1;
    b[t] = diffs.d[t].s2 - mu.s2;
  }
  HacEstimate h;
  h.m = m;
  h.kernel = kernel;
  double s11 = 0, s12 = 0, s22 = 0;
  for (std::size_t t = 0; t < n; ++t) {
    s11 += a[t] * a[t];
    s12 += a[t] * b[t];
    s22 += b[t] * b[t];
  }
  for (int lag = 1; lag <= m; ++lag) {
    const double w = kernel == Kernel::Flat ? 1.0 : 1.0 - static_cast<double>(lag) / (m + 1);
    double g11 = 0, g12 = 0, g21 = 0, g22 = 0;
    for (std::size_t t = static_cast<std::size_t>(lag); t < n; ++t) {
      g11 += a[t] * a[t - lag];
      g12 += a[t] * b[t - lag];
      g21 += b[t] * a[t - lag];
      g22 += b[t] * b[t - lag];
    }
    s11 += 2.0 * w * g11;
    s12 += w * (g12 + g21);
    s22 += 2.0 * w * g22;
  }
  const double dn = static_cast<double>(n);
  h.s11 = s11 / dn;
  h.s12 = s12 / dn;
  h.s22 = s22 / dn;
  return h;
}

HacEstimate repair_psd(const HacEstimate& omega) {
  const double trace = omega.s11 + omega.s22;
  if (!(trace > 0.0))
    throw DegenerateCovarianceError(
        "score-difference covariance is zero; if the VaR forecasts coincide use the degenerate "
        "test on the second component");
  Eigen::Matrix2d m;
  m << omega.s11, omega.s12, omega.s12, omega.s22;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(m);
  const double floor = 1e-12 * trace;
  if (eig.eigenvalues().minCoeff() >= floor) return omega;
  Eigen::Vector2d lam = eig.eigenvalues().cwiseMax(floor);
  const Eigen::Matrix2d r = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  HacEstimate out = omega;
  out.s11 = r(0, 0);
  out.s12 = 0.5 * (r(0, 1) + r(1, 0));
  out.s22 = r(1, 1);
  out.repaired = true;
  return out;
}

namespace {

double quad_form(MoScore d, const HacEstimate& o) {
  const double det = o.s11 * o.s22 - o.s12 * o.s12;
  return (o.s22 * d.s1 * d.s1 - 2.0 * o.s12 * d.s1 * d.s2 + o.s11 * d.s2 * d.s2) / det;
}

}  // namespace

DmResult dm_two_sided(const ScoreDiffSeries& diffs, const HacEstimate& omega) {
  DmResult r;
  r.n = diffs.n();
  r.dbar = diffs.mean();
  r.omega = repair_psd(omega);
  r.hypothesis = Hypothesis::TwoSided;
  r.statistic = std::max(0.0, static_cast<double>(r.n) * quad_form(r.dbar, r.omega));
  r.p_value = std::exp(-0.5 * r.statistic);
  return r;
}

double one_half_sided_pvalue(double statistic) {
  if (statistic <= 0.0) return 1.0;
  const double p = 0.5 * (1.0 + std::exp(-0.5 * statistic) - chi2_cdf(1.0, statistic));
  return std::clamp(p, 0.0, 1.0);
}

DmResult dm_one_half_sided(const ScoreDiffSeries& diffs, const HacEstimate& omega) {
  if (!(omega.s11 > 0.0))
    throw DegenerateCovarianceError(
        "first-component variance is zero; use the degenerate test on the second component");
  DmResult r;
  r.n = diffs.n();
  r.dbar = diffs.mean();
  r.omega = repair_psd(omega);
  r.hypothesis = Hypothesis::OneHalfSided;
  const double m2 = std::max(r.dbar.s2, r.omega.s12 / r.omega.s11 * r.dbar.s1);
  r.statistic = std::max(0.0, static_cast<double>(r.n) * quad_form({r.dbar.s1, m2}, r.omega));
  r.p_value = one_half_sided_pvalue(r.statistic);
  return r;
}

LevelAdjustment adjust_level(double nu) {
  if (!(nu > 0.0 && nu < 0.5)) throw DomainError("adjust_level: nu must lie in (0, 0.5)");
  auto size = [](double nt) { return 0.5 * (1.0 + nt - chi2_cdf(1.0, -2.0 * std::log(nt))); };
  double nt;
  try {
    nt = find_root([&](double x) { return size(x) - nu; }, 1e-12, 1.0 - 1e-12, 1e-14);
  } catch (const BracketError& e) {
    throw NumericError(std::string("adjust_level: ") + e.what());
  }
  LevelAdjustment a;
  a.nu = nu;
  a.nu_tilde = nt;
  a.chi2_crit = -2.0 * std::log(nt);
  a.nu_prime = 0.5 - 0.5 * chi2_cdf(1.0, a.chi2_crit);
  return a;
}

DmResult dm_degenerate(const ScoreDiffSeries& diffs, Side side, int m, Kernel kernel) {
  const HacEstimate h = hac_cov(diffs, m, kernel);
  if (!(h.s22 > 0.0))
    throw DegenerateCovarianceError("second-component differences have zero variance");
  DmResult r;
  r.n = diffs.n();
  r.dbar = diffs.mean();
  r.omega = h;
  r.hypothesis = Hypothesis::Degenerate;
  r.statistic = std::sqrt(static_cast<double>(r.n)) * r.dbar.s2 / std::sqrt(h.s22);
  r.p_value = side == Side::TwoSided ? 2.0 * norm_cdf(-std::abs(r.statistic))
                                     : norm_cdf(-r.statistic);
  return r;
}

TrafficZone classify_zone(MoScore dbar, const HacEstimate& omega, std::size_t n, double nu) {
  if (!(omega.s11 > 0.0)) throw DegenerateCovarianceError("traffic zones need s11 > 0");
  const HacEstimate o = repair_psd(omega);
  const double chi2 = adjust_level(nu).chi2_crit;
  const double dn = static_cast<double>(n);
  const double e1 = std::sqrt(o.s11 * chi2 / dn);
  if (dbar.s1 < -e1) return TrafficZone::Red;
  if (dbar.s1 > e1) return TrafficZone::Grey;
  if (dn * quad_form(dbar, o) <= chi2) return TrafficZone::Yellow;
  return dbar.s2 > o.s12 / o.s11 * dbar.s1 ? TrafficZone::Green : TrafficZone::Orange;
}

}  // namespace syrisk
