#include "syrisk/numerics.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/distributions/weibull.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace syrisk {

namespace {

// Double precision throughout; the default policy promotes to long double and
// is several times slower for the t quantile.
using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>,
                                             boost::math::policies::promote_float<false>>;
using Normal = boost::math::normal_distribution<double, Policy>;
using StudentT = boost::math::students_t_distribution<double, Policy>;
using ChiSquared = boost::math::chi_squared_distribution<double, Policy>;
using WeibullD = boost::math::weibull_distribution<double, Policy>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_open_unit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream os;
    os << what << ": argument " << p << " outside (0,1)";
    throw DomainError(os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------- univariate

void validate(const DistKind& kind) {
  std::visit(Overloaded{
                 [](const dist::StdNormal&) {},
                 [](const dist::StudentT& d) {
                   if (!(d.df > 0)) throw DomainError("StudentT: df must be positive");
                 },
                 [](const dist::ChiSq& d) {
                   if (d.k < 1) throw DomainError("ChiSq: k must be >= 1");
                 },
                 [](const dist::Weibull& d) {
                   if (!(d.shape > 0 && d.scale > 0))
                     throw DomainError("Weibull: shape and scale must be positive");
                 },
             },
             kind);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p, Policy());
}

double t_cdf(double df, double x) {
  if (std::isinf(df)) return norm_cdf(x);
  return boost::math::cdf(StudentT(df), x);
}

double t_quantile(double df, double p) {
  if (std::isinf(df)) return norm_quantile(p);
  return boost::math::quantile(StudentT(df), p);
}

double chi2_cdf(double k, double x) {
  if (x <= 0) return 0.0;
  return boost::math::cdf(ChiSquared(k), x);
}

double chi2_quantile(double k, double p) { return boost::math::quantile(ChiSquared(k), p); }

double pdf(const DistKind& kind, double x) {
  validate(kind);
  if (std::isnan(x)) throw DomainError("pdf: NaN argument");
  return std::visit(Overloaded{
                        [x](const dist::StdNormal&) { return boost::math::pdf(Normal(), x); },
                        [x](const dist::StudentT& d) {
                          return std::isinf(x) ? 0.0 : boost::math::pdf(StudentT(d.df), x);
                        },
                        [x](const dist::ChiSq& d) {
                          return x <= 0 ? 0.0 : boost::math::pdf(ChiSquared(d.k), x);
                        },
                        [x](const dist::Weibull& d) {
                          return x < 0 ? 0.0 : boost::math::pdf(WeibullD(d.shape, d.scale), x);
                        },
                    },
                    kind);
}

double cdf(const DistKind& kind, double x) {
  validate(kind);
  if (std::isnan(x)) throw DomainError("cdf: NaN argument");
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  return std::visit(Overloaded{
                        [x](const dist::StdNormal&) { return norm_cdf(x); },
                        [x](const dist::StudentT& d) { return boost::math::cdf(StudentT(d.df), x); },
                        [x](const dist::ChiSq& d) { return chi2_cdf(d.k, x); },
                        [x](const dist::Weibull& d) {
                          return x <= 0 ? 0.0 : boost::math::cdf(WeibullD(d.shape, d.scale), x);
                        },
                    },
                    kind);
}

double quantile(const DistKind& kind, double p) {
  validate(kind);
  require_open_unit(p, "quantile");
  return std::visit(
      Overloaded{
          [p](const dist::StdNormal&) { return norm_quantile(p); },
          [p](const dist::StudentT& d) { return boost::math::quantile(StudentT(d.df), p); },
          [p](const dist::ChiSq& d) { return boost::math::quantile(ChiSquared(d.k), p); },
          [p](const dist::Weibull& d) {
            return boost::math::quantile(WeibullD(d.shape, d.scale), p);
          },
      },
      kind);
}

double dist_fn(const DistKind& kind, DistFn which, double arg) {
  switch (which) {
    case DistFn::Pdf:
      return pdf(kind, arg);
    case DistFn::Cdf:
      return cdf(kind, arg);
    case DistFn::Quantile:
      return quantile(kind, arg);
  }
  throw DomainError("dist_fn: unknown function");
}

// ------------------------------------------------------------------- copulas

void validate(const Copula& c) {
  if (!(std::abs(c.rho) < 1.0)) throw DomainError("copula: |rho| must be < 1");
  if (!(c.df > 0)) throw DomainError("copula: df must be positive");
}

double latent_quantile(const Copula& c, double u) { return t_quantile(c.df, u); }

double copula_log_density_latent(const Copula& c, double z1, double z2) {
  const double r2 = 1.0 - c.rho * c.rho;
  if (c.is_gaussian()) {
    return -0.5 * std::log(r2) -
           (c.rho * c.rho * (z1 * z1 + z2 * z2) - 2.0 * c.rho * z1 * z2) / (2.0 * r2);
  }
  const double nu = c.df;
  const double q = (z1 * z1 - 2.0 * c.rho * z1 * z2 + z2 * z2) / (nu * r2);
  return std::lgamma(0.5 * (nu + 2)) + std::lgamma(0.5 * nu) - 2.0 * std::lgamma(0.5 * (nu + 1)) -
         0.5 * std::log(r2) - 0.5 * (nu + 2) * std::log1p(q) +
         0.5 * (nu + 1) * (std::log1p(z1 * z1 / nu) + std::log1p(z2 * z2 / nu));
}

double copula_density(const Copula& c, double u1, double u2) {
  validate(c);
  require_open_unit(u1, "copula density");
  require_open_unit(u2, "copula density");
  return std::exp(copula_log_density_latent(c, latent_quantile(c, u1), latent_quantile(c, u2)));
}

double copula_h_latent(const Copula& c, double z2, double z1) {
  const double r = std::sqrt(1.0 - c.rho * c.rho);
  if (c.is_gaussian()) return norm_cdf((z2 - c.rho * z1) / r);
  const double s = std::sqrt((c.df + z1 * z1) / (c.df + 1.0)) * r;
  return t_cdf(c.df + 1.0, (z2 - c.rho * z1) / s);
}

double copula_hbar_latent(const Copula& c, double z2, double z1) {
  const double r = std::sqrt(1.0 - c.rho * c.rho);
  if (c.is_gaussian()) return norm_cdf(-(z2 - c.rho * z1) / r);
  const double s = std::sqrt((c.df + z1 * z1) / (c.df + 1.0)) * r;
  return t_cdf(c.df + 1.0, -(z2 - c.rho * z1) / s);
}

double copula_h(const Copula& c, double u2, double u1) {
  validate(c);
  require_open_unit(u1, "copula h");
  require_open_unit(u2, "copula h");
  return copula_h_latent(c, latent_quantile(c, u2), latent_quantile(c, u1));
}

double copula_cdf(const Copula& c, double u1, double u2) {
  validate(c);
  require_open_unit(u1, "copula cdf");
  require_open_unit(u2, "copula cdf");
  if (c.rho == 0.0 && c.is_gaussian()) return u1 * u2;
  const double z2 = latent_quantile(c, u2);
  const double v = integrate_adaptive(
      [&](double s) { return copula_h_latent(c, z2, latent_quantile(c, s)); }, 0.0, u1, 1e-10);
  return std::clamp(v, std::max(0.0, u1 + u2 - 1.0), std::min(u1, u2));
}

double copula_survival(const Copula& c, double u1, double u2) {
  validate(c);
  require_open_unit(u1, "copula survival");
  require_open_unit(u2, "copula survival");
  if (c.rho == 0.0 && c.is_gaussian()) return (1.0 - u1) * (1.0 - u2);
  const double z2 = latent_quantile(c, u2);
  const double v = integrate_adaptive(
      [&](double s) { return copula_hbar_latent(c, z2, latent_quantile(c, s)); }, u1, 1.0, 1e-10);
  return std::clamp(v, std::max(0.0, 1.0 - u1 - u2), std::min(1.0 - u1, 1.0 - u2));
}

double copula_fn(const Copula& c, CopulaFn which, double u1, double u2) {
  switch (which) {
    case CopulaFn::Density:
      return copula_density(c, u1, u2);
    case CopulaFn::Cdf:
      return copula_cdf(c, u1, u2);
    case CopulaFn::Survival:
      return copula_survival(c, u1, u2);
  }
  throw DomainError("copula_fn: unknown function");
}

UpperTailSection::UpperTailSection(double u1, double df, int nodes) : u1_(u1), df_(df) {
  require_open_unit(u1, "UpperTailSection");
  if (!(df > 0)) throw DomainError("UpperTailSection: df must be positive");
  // s = 1 - (1-u1) w^4 pulls nodes towards s -> 1 where the conditional
  // exceedance probability varies fastest for positive dependence.
  const int half = nodes / 2;
  const auto& rule = gauss_legendre(half);
  const double tail = 1.0 - u1;
  for (int panel = 0; panel < 2; ++panel) {
    const double a = 0.5 * panel;
    for (int i = 0; i < half; ++i) {
      const double w = a + 0.25 * (rule.x[i] + 1.0);
      const double wt = 0.25 * rule.w[i];
      const double s = 1.0 - tail * w * w * w * w;
      const double z = t_quantile(df, s);
      z_.push_back(z);
      scale_.push_back(std::isinf(df) ? 1.0 : std::sqrt((df + z * z) / (df + 1.0)));
      weight_.push_back(wt * 4.0 * tail * w * w * w);
    }
  }
}

double UpperTailSection::from_latent(double rho, double z2) const {
  const double r = std::sqrt(1.0 - rho * rho);
  double acc = 0.0;
  if (std::isinf(df_)) {
    for (std::size_t i = 0; i < z_.size(); ++i)
      acc += weight_[i] * norm_cdf(-(z2 - rho * z_[i]) / r);
  } else {
    const StudentT t(df_ + 1.0);
    for (std::size_t i = 0; i < z_.size(); ++i)
      acc += weight_[i] * boost::math::cdf(t, -(z2 - rho * z_[i]) / (r * scale_[i]));
  }
  return acc;
}

double UpperTailSection::operator()(double rho, double u2) const {
  if (u2 >= 1.0) return 0.0;
  if (u2 <= 0.0) return 1.0 - u1_;
  return from_latent(rho, t_quantile(df_, u2));
}

// ---------------------------------------------------------------- root/quad

namespace detail {
void throw_nonfinite_root(double x) {
  std::ostringstream os;
  os << "find_root: non-finite function value at " << x;
  throw NumericError(os.str());
}
void throw_no_bracket(double lo, double hi, double flo, double fhi) {
  std::ostringstream os;
  os << "find_root: no sign change on [" << lo << ", " << hi << "] (f=" << flo << ", " << fhi
     << ")";
  throw BracketError(os.str());
}
}  // namespace detail

namespace {

GaussRule make_rule(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

}  // namespace

const GaussRule& gauss_legendre(int nodes) {
  if (nodes < 1) throw DomainError("gauss_legendre: nodes must be positive");
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(nodes);
  if (it == cache.end()) {
    if (nodes == 1) {
      it = cache.emplace(1, GaussRule{{0.0}, {2.0}}).first;
    } else {
      it = cache.emplace(nodes, make_rule(nodes)).first;
    }
  }
  return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b, int nodes) {
  if (!(a < b)) throw DomainError("integrate: requires a < b");
  const auto& rule = gauss_legendre(nodes);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double v = f(mid + half * rule.x[i]);
    if (!std::isfinite(v)) throw NumericError("integrate: non-finite integrand value");
    acc += rule.w[i] * v;
  }
  return acc * half;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol) {
  if (!(a < b)) throw DomainError("integrate_adaptive: requires a < b");
  auto g = [&](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw NumericError("integrate_adaptive: non-finite integrand value");
    return v;
  };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 12, tol, &err);
}

// ----------------------------------------------------------------------- RNG

namespace {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(M0, ctr[0], hi0, lo0);
    mulhilo(M1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

void RngStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32_10(ctr, key);
  buf_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buf_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  ++counter_;
  pos_ = 0;
}

RngStream::result_type RngStream::operator()() {
  if (pos_ >= 2) refill();
  return buf_[pos_++];
}

double RngStream::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(seed, stream_id);
}

}  // namespace syrisk
