#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "syrisk/error.hpp"

namespace syrisk {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------- univariate

namespace dist {
struct StdNormal {};
struct StudentT {
  double df;
};
struct ChiSq {
  int k;
};
struct Weibull {
  double shape;
  double scale;
};
}  // namespace dist

using DistKind = std::variant<dist::StdNormal, dist::StudentT, dist::ChiSq, dist::Weibull>;

enum class DistFn { Pdf, Cdf, Quantile };

void validate(const DistKind& kind);
double pdf(const DistKind& kind, double x);
double cdf(const DistKind& kind, double x);
/// Lower quantile; p must lie in (0,1).
double quantile(const DistKind& kind, double p);
double dist_fn(const DistKind& kind, DistFn which, double arg);

// Hot-path helpers that skip validation.
double norm_cdf(double x);
double norm_quantile(double p);
double t_cdf(double df, double x);
double t_quantile(double df, double p);
double chi2_cdf(double k, double x);
double chi2_quantile(double k, double p);

// ------------------------------------------------------------------- copulas

/// Bivariate elliptical copula; df = +inf is the Gaussian copula.
struct Copula {
  double rho = 0.0;
  double df = kInf;

  static Copula gaussian(double rho) { return {rho, kInf}; }
  static Copula student_t(double rho, double df) { return {rho, df}; }
  bool is_gaussian() const { return std::isinf(df); }
};

enum class CopulaFn { Density, Cdf, Survival };

void validate(const Copula& c);

/// Map a uniform to the copula's latent scale (normal or t quantile).
double latent_quantile(const Copula& c, double u);

/// Log-density evaluated on latent coordinates.
double copula_log_density_latent(const Copula& c, double z1, double z2);
double copula_density(const Copula& c, double u1, double u2);
/// P(U2 <= u2 | U1 = u1) on latent coordinates, and its complement computed
/// without cancellation.
double copula_h_latent(const Copula& c, double z2, double z1);
double copula_hbar_latent(const Copula& c, double z2, double z1);
/// P(U2 <= u2 | U1 = u1).
double copula_h(const Copula& c, double u2, double u1);
double copula_cdf(const Copula& c, double u1, double u2);
/// P(U1 > u1, U2 > u2).
double copula_survival(const Copula& c, double u1, double u2);
double copula_fn(const Copula& c, CopulaFn which, double u1, double u2);

/// Survival S(u1, u2) for a fixed u1 and copula family, reused across many
/// correlations and second arguments. Precomputes the latent quantiles of a
/// fixed quadrature rule on (u1, 1).
class UpperTailSection {
 public:
  UpperTailSection(double u1, double df, int nodes = 48);
  double operator()(double rho, double u2) const;
  /// Same as operator() when the latent quantile of u2 is already known.
  double from_latent(double rho, double z2) const;
  double u1() const { return u1_; }
  double df() const { return df_; }

 private:
  double u1_;
  double df_;
  std::vector<double> z_;       // latent quantile at each node
  std::vector<double> scale_;   // sqrt((df + z^2)/(df + 1)) for t, 1 for normal
  std::vector<double> weight_;  // weights on (u1, 1)
};

// ---------------------------------------------------------------- root/quad

namespace detail {
[[noreturn]] void throw_nonfinite_root(double x);
[[noreturn]] void throw_no_bracket(double lo, double hi, double flo, double fhi);
}  // namespace detail

/// Root of f on [lo, hi] (TOMS 748). Requires f(lo)*f(hi) <= 0.
template <class F>
double find_root(F&& f, double lo, double hi, double tol = 1e-10) {
  if (!(lo <= hi)) throw DomainError("find_root: lo must not exceed hi");
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!std::isfinite(flo)) detail::throw_nonfinite_root(lo);
  if (!std::isfinite(fhi)) detail::throw_nonfinite_root(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) detail::throw_no_bracket(lo, hi, flo, fhi);
  if (hi - lo <= tol) return 0.5 * (lo + hi);
  auto g = [&](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) detail::throw_nonfinite_root(x);
    return v;
  };
  auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, flo, fhi, stop, iters);
  if (a == b) return a;
  return 0.5 * (a + b);
}

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

/// Gauss–Legendre rule with the given node count (cached, thread-safe).
const GaussRule& gauss_legendre(int nodes);

double integrate(const std::function<double(double)>& f, double a, double b, int nodes);

/// Adaptive Gauss–Kronrod; for smooth integrands with localized features.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-12);

// ----------------------------------------------------------------------- RNG

/// Counter-based Philox4x32-10 stream keyed by (seed, stream_id).
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return norm_quantile(uniform()); }
  /// Student t with the given degrees of freedom.
  double student_t(double df) { return t_quantile(df, uniform()); }
  double weibull(double shape, double scale) {
    return scale * std::pow(-std::log1p(-uniform()), 1.0 / shape);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int pos_ = 2;
};

RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id);

}  // namespace syrisk
