#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "syrisk/identification.hpp"
#include "syrisk/numerics.hpp"

using namespace syrisk;

namespace {

double phi_ref(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

ForecastTuple tuple(double v, std::optional<double> c, std::optional<double> e, std::optional<double> mu,
                    double alpha, double beta) {
  ForecastTuple f;
  f.v = v;
  f.c = c;
  f.e = e;
  f.mu = mu;
  f.levels = {alpha, beta};
  return f;
}

struct Atom {
  double x, y, p;
};

// 6 atoms on consecutive 0.01 grid points with dyadic masses, and levels
// placed exactly on cumulative masses so the truth is unique on the grid
struct ExactLaw {
  std::vector<Atom> atoms;
  double alpha, beta, v, c, e, mu;
};

ExactLaw exact_law(RngStream& rng) {
  ExactLaw l;
  int left = 64;
  for (int i = 0; i < 6; ++i) {
    const int m = i == 5 ? left : 1 + static_cast<int>(rng.uniform() * std::min(20, left - (5 - i)));
    left -= m;
    l.atoms.push_back({1.0 + i / 100.0, 2.0 + static_cast<int>(rng.uniform() * 6) / 100.0, m / 64.0});
  }
  // VaR at atom k (k < 4 keeps at least two tail atoms)
  const int k = static_cast<int>(rng.uniform() * 4);
  l.v = l.atoms[k].x;
  l.beta = 0;
  for (int i = 0; i <= k; ++i) l.beta += l.atoms[i].p;
  // tail atoms take consecutive y grid points in shuffled order
  std::vector<int> order;
  for (int i = k + 1; i < 6; ++i) order.push_back(i - k - 1);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::pair<double, double>> tail;
  double tm = 0;
  for (int i = k + 1; i < 6; ++i) {
    l.atoms[i].y = 2.0 + order[i - k - 1] / 100.0;
    tail.emplace_back(l.atoms[i].y, l.atoms[i].p);
    tm += l.atoms[i].p;
  }
  std::sort(tail.begin(), tail.end());
  const std::size_t j = static_cast<std::size_t>(rng.uniform() * (tail.size() - 1));
  double cum = 0;
  for (std::size_t i = 0; i <= j; ++i) cum += tail[i].second;
  l.alpha = cum / tm;
  l.c = tail[j].first;
  double up = 0, mean = 0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    mean += tail[i].first * tail[i].second / tm;
    if (i > j) up += tail[i].first * tail[i].second / tm;
  }
  l.e = up / (1 - l.alpha);
  l.mu = mean;
  return l;
}

std::vector<double> expected_id(IdKind kind, const ExactLaw& l, const ForecastTuple& f) {
  std::vector<double> m;
  for (const auto& a : l.atoms) {
    const auto v = identify(kind, f, {a.x, a.y});
    if (m.empty()) m.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) m[i] += a.p * v[i];
  }
  return m;
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST(Identify, Examples) {
  const auto v = identify(IdKind::VarCoVar, tuple(1, 2, {}, {}, 0.95, 0.95), {2, 3});
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v[0], -0.95);
  EXPECT_DOUBLE_EQ(v[1], -0.95);
  const auto w = identify(IdKind::VarCoVarCoEs, tuple(0, 1, 2, {}, 0.95, 0.95), {1, 2});
  EXPECT_NEAR(w[2], -19.0, 1e-12);
  EXPECT_EQ(identify(IdKind::VaR, tuple(1, {}, {}, {}, 0.9, 0.9), {0, 0}).size(), 1u);
}

TEST(Identify, ZeroExpectationIffTruth) {
  RngStream rng(31, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const ExactLaw l = exact_law(rng);
    const ForecastTuple truth = tuple(l.v, l.c, l.e, l.mu, l.alpha, l.beta);
    for (auto kind : {IdKind::VaR, IdKind::VarCoVar, IdKind::VarCoVarCoEs, IdKind::VarMes})
      EXPECT_LT(max_abs(expected_id(kind, l, truth)), 1e-12);
    for (int iv = 90; iv <= 115; ++iv)
      for (int ic = 190; ic <= 215; ++ic)
        for (int ke = -5; ke <= 5; ++ke) {
          const double v = 1.0 + (iv - 100) / 100.0, c = 2.0 + (ic - 200) / 100.0, e = l.e + ke / 100.0;
          const bool same = std::abs(v - l.v) < 1e-9 && std::abs(c - l.c) < 1e-9 && ke == 0;
          if (same) continue;
          EXPECT_GE(max_abs(expected_id(IdKind::VarCoVarCoEs, l, tuple(v, c, e, {}, l.alpha, l.beta))), 1e-3);
        }
    for (int iv = 90; iv <= 115; ++iv)
      for (int km = -5; km <= 5; ++km) {
        const double v = 1.0 + (iv - 100) / 100.0;
        if (std::abs(v - l.v) < 1e-9 && km == 0) continue;
        EXPECT_GE(max_abs(expected_id(IdKind::VarMes, l, tuple(v, {}, {}, l.mu + km / 100.0, l.alpha, l.beta))),
                  1e-3);
      }
  }
}

TEST(IdentifyNonStrict, Examples) {
  const RiskLevels l{0.95, 0.95};
  EXPECT_NEAR(identify_nonstrict(1, 1, {2, 2}, l), 0.9975, 1e-15);
  EXPECT_NEAR(identify_nonstrict(1, 1, {0, 2}, l), -0.0025, 1e-15);
}

TEST(IdentifyNonStrict, BiasesCancelAlongLevelCurve) {
  // standard bivariate normal with rho = 0.5; forecasts at (beta', alpha') = (0.99, 0.75)
  const double rho = 0.5, bp = 0.99, ap = 0.75;
  const double v = quantile(dist::StdNormal{}, bp);
  auto joint_tail = [&](double c) {  // P(X > v, Y > c) by Simpson in x
    const int n = 4000;
    const double hi = 9.0, h = (hi - v) / n;
    double s = 0;
    for (int i = 0; i <= n; ++i) {
      const double x = v + i * h;
      const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
      s += w * std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI) * (1 - phi_ref((c - rho * x) / std::sqrt(1 - rho * rho)));
    }
    return s * h / 3;
  };
  double lo = -5, hi = 8;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (joint_tail(mid) > (1 - ap) * (1 - bp) ? lo : hi) = mid;
  }
  const double c = lo;
  // expectation of the baseline under the true law at nominal levels (0.95, 0.95)
  const double e_nonstrict = joint_tail(c) - 0.05 * 0.05;
  EXPECT_NEAR(e_nonstrict, 0.0, 1e-3);
  // first strict component: P(X <= v) - 0.95 = beta' - beta
  EXPECT_NEAR(phi_ref(v) - 0.95, 0.04, 1e-12);
}

TEST(Calibration, AllZeroIdentification) {
  std::vector<ForecastTuple> f(20, tuple(-1, {}, {}, {}, 0.9, 0.0));
  LossSeries obs;
  for (int i = 0; i < 20; ++i) obs.x.push_back(i), obs.y.push_back(0);
  const auto r = calibration_test(f, obs, IdKind::VaR, IdVariant::Strict);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Calibration, PValueIsChiSquareSurvival) {
  RngStream rng(4, 0);
  std::vector<ForecastTuple> f;
  LossSeries obs;
  for (int i = 0; i < 500; ++i) {
    f.push_back(tuple(1.2, 1.0, {}, {}, 0.8, 0.85));
    obs.x.push_back(rng.normal());
    obs.y.push_back(rng.normal());
  }
  const auto r = calibration_test(f, obs, IdKind::VarCoVar, IdVariant::Strict);
  ASSERT_EQ(r.dof, 2);
  EXPECT_NEAR(r.p_value, std::exp(-0.5 * r.statistic), 1e-12);
  // direct Wald statistic with the 1/n sample covariance
  double m0 = 0, m1 = 0;
  std::vector<std::array<double, 2>> z;
  for (int t = 0; t < 500; ++t) {
    const auto v = identify(IdKind::VarCoVar, f[t], obs[t]);
    z.push_back({v[0], v[1]});
    m0 += v[0] / 500;
    m1 += v[1] / 500;
  }
  double s00 = 0, s01 = 0, s11 = 0;
  for (auto& v : z) {
    s00 += (v[0] - m0) * (v[0] - m0) / 500;
    s01 += (v[0] - m0) * (v[1] - m1) / 500;
    s11 += (v[1] - m1) * (v[1] - m1) / 500;
  }
  const double det = s00 * s11 - s01 * s01;
  const double stat = 500 * (s11 * m0 * m0 - 2 * s01 * m0 * m1 + s00 * m1 * m1) / det;
  EXPECT_NEAR(r.statistic, stat, 1e-8 * stat);
}

TEST(Calibration, InstrumentRescalingInvariance) {
  RngStream rng(5, 0);
  std::vector<ForecastTuple> f;
  LossSeries obs;
  std::vector<std::vector<double>> inst, inst2;
  double prev = 0;
  for (int i = 0; i < 400; ++i) {
    f.push_back(tuple(1.0, 1.2, {}, {}, 0.8, 0.8));
    obs.x.push_back(rng.normal());
    obs.y.push_back(rng.normal());
    inst.push_back({1.0, prev});
    inst2.push_back({2.0 * 1.0 + 1.0 * prev, 3.0 * prev});
    prev = obs.x.back();
  }
  const auto a = calibration_test(f, obs, IdKind::VarCoVar, IdVariant::Strict, inst);
  const auto b = calibration_test(f, obs, IdKind::VarCoVar, IdVariant::Strict, inst2);
  EXPECT_EQ(a.dof, 4);
  EXPECT_NEAR(a.statistic, b.statistic, 1e-8 * a.statistic);
}

TEST(Calibration, SingularCovarianceDropsRank) {
  // no CoVaR exceedance: the second identification component is a multiple of
  // the tail indicator, collinear with the first
  std::vector<ForecastTuple> f;
  LossSeries obs;
  for (int i = 0; i < 100; ++i) {
    f.push_back(tuple(0.5, 100.0, {}, {}, 0.9, 0.9));
    obs.x.push_back(i % 10 == 0 ? 1.0 : 0.0);
    obs.y.push_back(0.0);
  }
  const auto r = calibration_test(f, obs, IdKind::VarCoVar, IdVariant::Strict);
  EXPECT_TRUE(r.rank_deficient);
  EXPECT_EQ(r.dof, 1);
  EXPECT_GE(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);
}

TEST(Calibration, Errors) {
  std::vector<ForecastTuple> f(3, tuple(1, 1, {}, {}, 0.9, 0.9));
  LossSeries obs{{}, {1, 2, 3}, {1, 2, 3}};
  EXPECT_THROW(calibration_test(f, obs, IdKind::VarCoVar, IdVariant::Strict), InsufficientDataError);
  LossSeries shorter{{}, {1, 2}, {1, 2}};
  EXPECT_THROW(calibration_test(f, shorter, IdKind::VaR, IdVariant::Strict), DataError);
  EXPECT_THROW(calibration_test(f, obs, IdKind::VarMes, IdVariant::NonStrict), DomainError);
}
