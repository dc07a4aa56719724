#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "syrisk/dm.hpp"
#include "syrisk/numerics.hpp"

using namespace syrisk;

namespace {

ScoreDiffSeries constant(MoScore d, std::size_t n) { return {std::vector<MoScore>(n, d)}; }

HacEstimate identity() {
  HacEstimate h;
  h.s11 = 1;
  h.s22 = 1;
  return h;
}

HacEstimate matrix(double s11, double s12, double s22) {
  HacEstimate h;
  h.s11 = s11;
  h.s12 = s12;
  h.s22 = s22;
  return h;
}

double wald(double d1, double d2, const HacEstimate& o, std::size_t n) {
  const double det = o.s11 * o.s22 - o.s12 * o.s12;
  return n * (o.s22 * d1 * d1 - 2 * o.s12 * d1 * d2 + o.s11 * d2 * d2) / det;
}

// chi-square(1) cdf via erf
double chi1_cdf(double s) { return std::erf(std::sqrt(s / 2)); }

double level_of(double nu_tilde) { return 0.5 * (1 + nu_tilde - chi1_cdf(-2 * std::log(nu_tilde))); }

ForecastTuple tuple(double v, double c) {
  ForecastTuple f;
  f.v = v;
  f.c = c;
  f.levels = {0.9, 0.9};
  return f;
}

}  // namespace

TEST(ScoreDiff, IdenticalForecastsGiveZeros) {
  std::vector<ForecastTuple> f = {tuple(1, 2), tuple(1.5, 2.5), tuple(0.5, 1)};
  LossSeries obs{{}, {2, 1, 3}, {3, 0.5, 2}};
  const auto d = score_diff_series(f, f, obs, ScoreSpec::canonical(Functional::VarCoVar));
  for (auto& x : d.d) {
    EXPECT_EQ(x.s1, 0.0);
    EXPECT_EQ(x.s2, 0.0);
  }
}

TEST(ScoreDiff, HandFixture) {
  // canonical (VaR, CoVaR) at levels 0.9: S1 = (1{x<=v}-0.9)(v-x),
  // S2 = 1{x>v}[(1{y<=c}-0.9)c - 1{y<=c}y]
  std::vector<ForecastTuple> f1 = {tuple(1, 2), tuple(1.5, 2.5), tuple(0.5, 1)};
  std::vector<ForecastTuple> f2 = {tuple(2, 1), tuple(1.0, 3.0), tuple(0.5, 4)};
  LossSeries obs{{}, {2, 1, 3}, {3, 0.5, 2}};
  const auto d = score_diff_series(f1, f2, obs, ScoreSpec::canonical(Functional::VarCoVar));
  ASSERT_EQ(d.n(), 3u);
  // t=0: S(f1) = (-0.9)(-1)=0.9, S2 = (-0.9)*2 = -1.8; S(f2) = 0.1*0 = 0, S2 = 0
  EXPECT_NEAR(d.d[0].s1, 0.9, 1e-14);
  EXPECT_NEAR(d.d[0].s2, -1.8, 1e-14);
  // t=1: S(f1) = 0.1*0.5 = 0.05, S2 = 0; S(f2) = 0.1*0 = 0, S2 = 0
  EXPECT_NEAR(d.d[1].s1, 0.05, 1e-14);
  EXPECT_NEAR(d.d[1].s2, 0.0, 1e-14);
  // t=2: same VaR; S2(f1) = 1{2<=1}.. = -0.9*1 = -0.9; S2(f2) = 0.1*4 - 2 = -1.6
  EXPECT_NEAR(d.d[2].s1, 0.0, 1e-14);
  EXPECT_NEAR(d.d[2].s2, 0.7, 1e-14);
}

TEST(ScoreDiff, ZeroHomScaleInvariance) {
  RngStream rng(8, 0);
  std::vector<ForecastTuple> f1, f2, g1, g2;
  LossSeries obs, sobs;
  const double lambda = 7.0;
  for (int t = 0; t < 200; ++t) {
    f1.push_back(tuple(0.5 + rng.uniform(), 0.5 + 2 * rng.uniform()));
    f2.push_back(tuple(0.5 + rng.uniform(), 0.5 + 2 * rng.uniform()));
    obs.x.push_back(0.2 + 2 * rng.uniform());
    obs.y.push_back(0.2 + 3 * rng.uniform());
    g1.push_back(tuple(lambda * f1.back().v, lambda * *f1.back().c));
    g2.push_back(tuple(lambda * f2.back().v, lambda * *f2.back().c));
    sobs.x.push_back(lambda * obs.x.back());
    sobs.y.push_back(lambda * obs.y.back());
  }
  const auto spec = ScoreSpec::zero_hom(Functional::VarCoVar);
  const auto a = score_diff_series(f1, f2, obs, spec);
  const auto b = score_diff_series(g1, g2, sobs, spec);
  for (std::size_t t = 0; t < a.n(); ++t) {
    EXPECT_NEAR(a.d[t].s1, b.d[t].s1, 1e-10);
    EXPECT_NEAR(a.d[t].s2, b.d[t].s2, 1e-10);
  }
}

TEST(Hac, ConstantSeriesIsZero) {
  const auto h = hac_cov(constant({0.3, -0.2}, 50), 3, Kernel::Bartlett);
  EXPECT_EQ(h.s11, 0.0);
  EXPECT_EQ(h.s12, 0.0);
  EXPECT_EQ(h.s22, 0.0);
}

TEST(Hac, LagZeroIsSampleCovariance) {
  RngStream rng(2, 0);
  ScoreDiffSeries d;
  for (int i = 0; i < 100; ++i) d.d.push_back({rng.normal(), 0.5 * rng.normal() + 0.1});
  double m1 = 0, m2 = 0;
  for (auto& x : d.d) m1 += x.s1 / 100, m2 += x.s2 / 100;
  double c11 = 0, c12 = 0, c22 = 0;
  for (auto& x : d.d) {
    c11 += (x.s1 - m1) * (x.s1 - m1) / 100;
    c12 += (x.s1 - m1) * (x.s2 - m2) / 100;
    c22 += (x.s2 - m2) * (x.s2 - m2) / 100;
  }
  const auto h = hac_cov(d, 0);
  EXPECT_NEAR(h.s11, c11, 1e-14);
  EXPECT_NEAR(h.s12, c12, 1e-14);
  EXPECT_NEAR(h.s22, c22, 1e-14);
}

TEST(Hac, BartlettMatchesWeightedSum) {
  RngStream rng(3, 0);
  ScoreDiffSeries d;
  double e1 = rng.normal(), e2 = rng.normal();
  for (int i = 0; i < 300; ++i) {
    const double n1 = rng.normal(), n2 = rng.normal();
    d.d.push_back({n1 + 0.6 * e1, n2 - 0.4 * e2 + 0.3 * n1});
    e1 = n1;
    e2 = n2;
  }
  const int m = 5;
  const std::size_t n = d.n();
  double m1 = 0, m2 = 0;
  for (auto& x : d.d) m1 += x.s1 / n, m2 += x.s2 / n;
  double o[2][2] = {{0, 0}, {0, 0}};
  for (int h = -m; h <= m; ++h) {
    const double w = 1.0 - std::abs(h) / (m + 1.0);
    for (std::size_t t = 0; t < n; ++t) {
      const long s = static_cast<long>(t) - h;
      if (s < 0 || s >= static_cast<long>(n)) continue;
      const double a[2] = {d.d[t].s1 - m1, d.d[t].s2 - m2};
      const double b[2] = {d.d[s].s1 - m1, d.d[s].s2 - m2};
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) o[i][k] += w * a[i] * b[k] / n;
    }
  }
  const auto r = hac_cov(d, m, Kernel::Bartlett);
  EXPECT_NEAR(r.s11, o[0][0], 1e-12);
  EXPECT_NEAR(r.s12, o[0][1], 1e-12);
  EXPECT_NEAR(r.s22, o[1][1], 1e-12);
}

TEST(Hac, Errors) {
  EXPECT_THROW(hac_cov(constant({1, 1}, 1)), InsufficientDataError);
  EXPECT_THROW(hac_cov(constant({1, 1}, 5), 5), DomainError);
}

TEST(DmTwoSided, Examples) {
  const auto z = dm_two_sided(constant({0, 0}, 100), identity());
  EXPECT_EQ(z.statistic, 0.0);
  EXPECT_EQ(z.p_value, 1.0);
  const auto r = dm_two_sided(constant({0.1, 0.2}, 100), identity());
  EXPECT_NEAR(r.statistic, 5.0, 1e-12);
  EXPECT_NEAR(r.p_value, std::exp(-2.5), 1e-12);
  EXPECT_NEAR(r.p_value, 0.0821, 1e-4);
}

TEST(DmTwoSided, SwapInvariance) {
  RngStream rng(4, 0);
  for (int k = 0; k < 20; ++k) {
    const double d1 = rng.normal() * 0.1, d2 = rng.normal() * 0.1;
    const HacEstimate o = matrix(1 + rng.uniform(), 0.3 * rng.normal(), 1 + rng.uniform());
    EXPECT_NEAR(dm_two_sided(constant({d1, d2}, 80), o).statistic,
                dm_two_sided(constant({-d1, -d2}, 80), o).statistic, 1e-12);
  }
}

TEST(DmTwoSided, SingularCovarianceThrows) {
  EXPECT_THROW(dm_two_sided(constant({0.1, 0.1}, 50), matrix(0, 0, 0)), DegenerateCovarianceError);
}

TEST(DmTwoSided, NullSizeAndChiSquareFit) {
  RngStream rng(11, 0);
  const int reps = 5000, n = 1000;
  std::vector<double> stats;
  int rejections = 0;
  for (int r = 0; r < reps; ++r) {
    ScoreDiffSeries d;
    d.d.reserve(n);
    for (int t = 0; t < n; ++t) {
      const double a = rng.normal(), b = rng.normal();
      d.d.push_back({a, 0.5 * a + b});
    }
    const auto res = dm_two_sided(d, hac_cov(d));
    stats.push_back(res.statistic);
    rejections += res.p_value < 0.05;
  }
  const double rate = static_cast<double>(rejections) / reps;
  EXPECT_GE(rate, 0.042);
  EXPECT_LE(rate, 0.058);
  std::sort(stats.begin(), stats.end());
  double ks = 0;
  for (int i = 0; i < reps; ++i) {
    const double f = 1 - std::exp(-stats[i] / 2);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / reps), std::abs(f - (i + 1.0) / reps)});
  }
  EXPECT_LT(ks, 0.05);
}

TEST(DmOneHalfSided, Examples) {
  const auto a = dm_one_half_sided(constant({0, -1}, 100), identity());
  EXPECT_EQ(a.statistic, 0.0);
  const auto b = dm_one_half_sided(constant({0, 0.3}, 100), identity());
  EXPECT_NEAR(b.statistic, 9.0, 1e-12);
  const auto lvl = adjust_level(0.05);
  EXPECT_NEAR(lvl.chi2_crit, 5.139, 1e-3);
  EXPECT_GT(b.statistic, lvl.chi2_crit);
  EXPECT_LT(b.p_value, 0.05);
  // p-value inverts the level equation at the statistic
  EXPECT_NEAR(b.p_value, level_of(std::exp(-4.5)), 1e-10);
}

TEST(DmOneHalfSided, GridInfimumOracle) {
  RngStream rng(5, 0);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 100;
    const double s11 = 0.5 + rng.uniform(), s22 = 0.5 + rng.uniform();
    const double s12 = (rng.uniform() - 0.5) * 1.6 * std::sqrt(s11 * s22);
    const HacEstimate o = matrix(s11, s12, s22);
    const double d1 = 0.3 * rng.normal(), d2 = 0.3 * rng.normal();
    double best = wald(d1, d2, o, n);
    for (int i = 1; i <= 10000; ++i) best = std::min(best, wald(d1, d2 + i * 1e-3, o, n));
    const double stat = dm_one_half_sided(constant({d1, d2}, n), o).statistic;
    // the grid can only overshoot the infimum, by at most the curvature times (5e-4)^2
    const double slack = n * s11 / (s11 * s22 - s12 * s12) * 2.5e-7 + 1e-10;
    EXPECT_LE(stat, best + 1e-10);
    EXPECT_GE(stat, best - slack);
  }
}

TEST(DmOneHalfSided, NeverRejectsInNullCone) {
  for (double d2 : {0.0, -0.1, -3.0}) {
    const auto r = dm_one_half_sided(constant({0.0, d2}, 100), matrix(1.0, 0.4, 2.0));
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
  }
}

TEST(DmOneHalfSided, ZeroVarianceOfFirstComponentThrows) {
  EXPECT_THROW(dm_one_half_sided(constant({0, 0.1}, 100), matrix(0.0, 0.0, 1.0)), DegenerateCovarianceError);
}

TEST(AdjustLevel, PublishedLevels) {
  const auto a = adjust_level(0.05);
  EXPECT_NEAR(a.nu_tilde, 0.0766, 5e-5);
  EXPECT_NEAR(a.nu_prime, 0.0117, 5e-5);
  EXPECT_NEAR(a.chi2_crit, -2 * std::log(a.nu_tilde), 1e-12);
  EXPECT_NEAR(adjust_level(0.01).nu_tilde, 0.0160, 5e-5);
  EXPECT_NEAR(adjust_level(0.10).nu_tilde, 0.149, 5e-4);
}

TEST(AdjustLevel, MonotoneAndRoundTrip) {
  double prev = 0;
  for (double nu = 0.001; nu < 0.5; nu += 0.007) {
    const auto a = adjust_level(nu);
    EXPECT_GT(a.nu_tilde, prev);
    prev = a.nu_tilde;
    EXPECT_NEAR(level_of(a.nu_tilde), nu, 1e-8);
    EXPECT_NEAR(a.nu_prime, 0.5 - 0.5 * chi1_cdf(a.chi2_crit), 1e-12);
    EXPECT_NEAR(one_half_sided_pvalue(a.chi2_crit), nu, 1e-8);
  }
  EXPECT_THROW(adjust_level(0.0), DomainError);
  EXPECT_THROW(adjust_level(0.5), DomainError);
}

TEST(DmDegenerate, Examples) {
  ScoreDiffSeries zero;
  for (int i = 0; i < 100; ++i) zero.d.push_back({0.0, i % 2 ? 1.0 : -1.0});
  const auto z = dm_degenerate(zero, Side::TwoSided);
  EXPECT_EQ(z.statistic, 0.0);
  EXPECT_NEAR(z.p_value, 1.0, 1e-15);
  // mean 0.1 and population variance 1: alternate 0.1 +- 1
  ScoreDiffSeries d;
  for (int i = 0; i < 100; ++i) d.d.push_back({0.0, 0.1 + (i % 2 ? 1.0 : -1.0)});
  const auto r = dm_degenerate(d, Side::OneSided);
  EXPECT_NEAR(r.statistic, 1.0, 1e-12);
  EXPECT_NEAR(r.p_value, 0.1587, 1e-4);
  EXPECT_NEAR(dm_degenerate(d, Side::TwoSided).p_value, 2 * 0.158655, 1e-5);
  EXPECT_EQ(r.hypothesis, Hypothesis::Degenerate);
  EXPECT_THROW(dm_degenerate(constant({0, 0.2}, 10), Side::TwoSided), DegenerateCovarianceError);
}

TEST(DmDegenerate, NullRejectionRate) {
  RngStream rng(12, 0);
  int rej = 0;
  const int reps = 5000;
  for (int r = 0; r < reps; ++r) {
    ScoreDiffSeries d;
    for (int t = 0; t < 500; ++t) d.d.push_back({0.0, rng.normal()});
    rej += dm_degenerate(d, Side::TwoSided).p_value < 0.05;
  }
  EXPECT_GE(rej / double(reps), 0.042);
  EXPECT_LE(rej / double(reps), 0.058);
}

TEST(Zones, Fixtures) {
  const double e1 = std::sqrt(-2 * std::log(adjust_level(0.05).nu_tilde) / 100);
  EXPECT_NEAR(e1, 0.2267, 1e-4);
  EXPECT_EQ(classify_zone({0, 0}, identity(), 100), TrafficZone::Yellow);
  EXPECT_EQ(classify_zone({0.3, 0}, identity(), 100), TrafficZone::Grey);
  EXPECT_EQ(classify_zone({-0.3, 0}, identity(), 100), TrafficZone::Red);
  EXPECT_EQ(classify_zone({0, 0.3}, identity(), 100), TrafficZone::Green);
  EXPECT_EQ(classify_zone({0, -0.3}, identity(), 100), TrafficZone::Orange);
}

TEST(Zones, PartitionAndBoundary) {
  RngStream rng(6, 0);
  const double chi = adjust_level(0.05).chi2_crit;
  for (int k = 0; k < 2000; ++k) {
    const double s11 = 0.2 + rng.uniform(), s22 = 0.2 + rng.uniform();
    const double s12 = (rng.uniform() - 0.5) * 1.8 * std::sqrt(s11 * s22);
    const HacEstimate o = matrix(s11, s12, s22);
    const std::size_t n = 100;
    const MoScore d{0.5 * rng.normal(), 0.5 * rng.normal()};
    const TrafficZone z = classify_zone(d, o, n);
    const double e1 = std::sqrt(s11 * chi / n);
    const double w = wald(d.s1, d.s2, o, n);
    TrafficZone expect;
    if (d.s1 < -e1)
      expect = TrafficZone::Red;
    else if (d.s1 > e1)
      expect = TrafficZone::Grey;
    else if (w <= chi)
      expect = TrafficZone::Yellow;
    else
      expect = d.s2 > s12 / s11 * d.s1 ? TrafficZone::Green : TrafficZone::Orange;
    EXPECT_EQ(z, expect);
    // boundary point of the ellipse along the direction of d
    if (w > 0) {
      const double r = std::sqrt(chi / w) * (1 - 1e-13);
      const MoScore b{d.s1 * r, d.s2 * r};
      EXPECT_EQ(classify_zone(b, o, n), TrafficZone::Yellow);
    }
  }
}
