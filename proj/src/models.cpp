#include "syrisk/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <cstdio>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

namespace syrisk {

std::string to_string(GarchFamily f) { return f == GarchFamily::Garch ? "garch" : "gjr-garch"; }
std::string to_string(CopulaFamily f) { return f == CopulaFamily::Gaussian ? "gaussian" : "t"; }

GarchFamily garch_family_from_string(const std::string& s) {
  if (s == "garch") return GarchFamily::Garch;
  if (s == "gjr-garch" || s == "gjr") return GarchFamily::GjrGarch;
  throw UsageError("unknown margin family '" + s + "'");
}

CopulaFamily copula_family_from_string(const std::string& s) {
  if (s == "gaussian" || s == "normal") return CopulaFamily::Gaussian;
  if (s == "t" || s == "student-t") return CopulaFamily::StudentT;
  throw UsageError("unknown copula family '" + s + "'");
}

double gas_link(double f) { return std::tanh(0.5 * f); }

double gas_link_inverse(double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("gas_link_inverse: |rho| must be < 1");
  return 2.0 * std::atanh(rho);
}

double Innovation::scale() const {
  if (!standardize) return 1.0;
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, dist::StdNormal>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, dist::StudentT>) {
          if (!(d.df > 2.0)) throw DomainError("standardized t innovation needs df > 2");
          return std::sqrt((d.df - 2.0) / d.df);
        } else if constexpr (std::is_same_v<T, dist::ChiSq>) {
          return 1.0 / std::sqrt(2.0 * d.k);
        } else {
          const double g1 = std::tgamma(1.0 + 1.0 / d.shape);
          const double g2 = std::tgamma(1.0 + 2.0 / d.shape);
          return 1.0 / (d.scale * std::sqrt(g2 - g1 * g1));
        }
      },
      kind);
}

double Innovation::quantile(double u) const {
  double q = syrisk::quantile(kind, u);
  if (standardize) {
    // centre the non-symmetric laws too
    if (const auto* c = std::get_if<dist::ChiSq>(&kind)) q -= c->k;
    if (const auto* w = std::get_if<dist::Weibull>(&kind))
      q -= w->scale * std::tgamma(1.0 + 1.0 / w->shape);
    q *= scale();
  }
  return q;
}

// --------------------------------------------------------------- optimizer

namespace {

struct MinResult {
  std::vector<double> x;
  double fmin = kInf;
  std::vector<double> trace;
  bool converged = false;
  std::size_t iterations = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

double gsl_trampoline(const gsl_vector* v, void* params) {
  auto* obj = static_cast<Objective*>(params);
  std::vector<double> x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
  const double r = (*obj)(x);
  return std::isfinite(r) ? r : 1e100;
}

struct GslVector {
  gsl_vector* p;
  explicit GslVector(std::size_t n) : p(gsl_vector_alloc(n)) {}
  ~GslVector() { gsl_vector_free(p); }
  GslVector(const GslVector&) = delete;
  GslVector& operator=(const GslVector&) = delete;
};

struct GslMinimizer {
  gsl_multimin_fminimizer* p;
  explicit GslMinimizer(std::size_t n)
      : p(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n)) {}
  ~GslMinimizer() { gsl_multimin_fminimizer_free(p); }
  GslMinimizer(const GslMinimizer&) = delete;
  GslMinimizer& operator=(const GslMinimizer&) = delete;
};

MinResult nelder_mead(Objective obj, const std::vector<double>& start, double step,
                      double size_tol, std::size_t max_iter) {
  const std::size_t n = start.size();
  GslVector x(n), ss(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x.p, i, start[i]);
    gsl_vector_set(ss.p, i, step);
  }
  gsl_multimin_function fn{&gsl_trampoline, n, &obj};
  GslMinimizer m(n);
  gsl_set_error_handler_off();
  gsl_multimin_fminimizer_set(m.p, &fn, x.p, ss.p);

  MinResult r;
  int status = GSL_CONTINUE;
  for (; r.iterations < max_iter && status == GSL_CONTINUE; ++r.iterations) {
    if (gsl_multimin_fminimizer_iterate(m.p) != GSL_SUCCESS) break;
    r.trace.push_back(m.p->fval);
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.p), size_tol);
    // a flat ridge towards a boundary never shrinks the simplex; stop once
    // the objective has stalled for kStall iterations
    constexpr std::size_t kStall = 200;
    if (status == GSL_CONTINUE && r.trace.size() > kStall) {
      const double old = r.trace[r.trace.size() - 1 - kStall];
      if (old - m.p->fval <= 1e-10 * (1.0 + std::abs(m.p->fval))) status = GSL_SUCCESS;
    }
  }
  r.converged = status == GSL_SUCCESS;
  r.fmin = m.p->fval;
  r.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.x[i] = gsl_vector_get(m.p->x, i);
  return r;
}

using Gradient = std::function<Eigen::VectorXd(const std::vector<double>&)>;

/// Newton steps on an analytic gradient with a finite-difference Hessian.
/// Takes the simplex solution to the accuracy of the gradient so estimates
/// depend smoothly on the data; stops at a saddle or when a step is large.
void newton_polish(const Objective& obj, const Gradient& grad, MinResult& r) {
  constexpr double h = 1e-5;
  const std::size_t d = r.x.size();
  for (int it = 0; it < 6; ++it) {
    const Eigen::VectorXd g = grad(r.x);
    Eigen::MatrixXd H(d, d);
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<double> xp = r.x, xm = r.x;
      xp[i] += h;
      xm[i] -= h;
      H.col(static_cast<Eigen::Index>(i)) = (grad(xp) - grad(xm)) / (2 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
    if (!g.allFinite() || !H.allFinite()) return;
    // pseudo-inverse on the well-determined directions; a direction with
    // negligible curvature is a flat ridge (e.g. persistence at one)
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::VectorXd lam = es.eigenvalues();
    const double top = lam.cwiseAbs().maxCoeff();
    if (!(top > 0.0) || lam.minCoeff() < -1e-8 * top) return;
    const Eigen::VectorXd gq = es.eigenvectors().transpose() * g;
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam(i) > 1e-8 * top) sq(i) = -gq(i) / lam(i);
    const Eigen::VectorXd step = es.eigenvectors() * sq;
    if (!(step.norm() < 0.5)) return;
    std::vector<double> x = r.x;
    for (std::size_t i = 0; i < d; ++i) x[i] += step(static_cast<Eigen::Index>(i));
    const double f1 = obj(x);
    if (!(f1 <= r.fmin + 1e-9 * (1.0 + std::abs(r.fmin)))) return;
    r.x = x;
    r.fmin = f1;
    if (step.norm() < 1e-14) return;
  }
}

/// Best of a deterministic start and four jittered restarts.
MinResult minimize_with_restarts(const Objective& obj, const std::vector<double>& start,
                                 std::uint64_t seed, const char* what) {
  constexpr int kRestarts = 5;
  constexpr double kSizeTol = 1e-8;
  constexpr std::size_t kMaxIter = 4000;
  RngStream rng(seed, 0);
  MinResult best;
  std::vector<double> first_trace;
  int converged = 0;
  for (int k = 0; k < kRestarts; ++k) {
    std::vector<double> s = start;
    if (k > 0)
      for (double& v : s) v += 0.5 * rng.normal();
    MinResult r = nelder_mead(obj, s, 0.1, kSizeTol, kMaxIter);
    if (k == 0) first_trace = r.trace;
    if (r.converged) ++converged;
    if (r.fmin < best.fmin) best = r;
  }
  // polish the winner with a fresh, smaller simplex
  if (best.fmin < 1e99) {
    MinResult p = nelder_mead(obj, best.x, 0.01, kSizeTol, kMaxIter);
    if (p.fmin <= best.fmin) {
      best.x = p.x;
      best.fmin = p.fmin;
      if (p.converged) ++converged;
    }
  }
  if (!(best.fmin < 1e99) || converged == 0) {
    std::ostringstream os;
    os << what << ": optimizer did not converge after " << kRestarts
       << " starts (best objective " << best.fmin << ")";
    throw EstimationError(os.str());
  }
  best.trace = std::move(first_trace);
  return best;
}

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

double sample_variance(const std::vector<double>& z) {
  const double m = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
  double s = 0.0;
  for (double v : z) s += (v - m) * (v - m);
  return s / z.size();
}

}  // namespace

// ------------------------------------------------------------------- GARCH

std::vector<double> garch_variance_path(const GarchParams& p, const std::vector<double>& z,
                                        double sigma2_init) {
  std::vector<double> s2(z.size() + 1);
  s2[0] = sigma2_init;
  for (std::size_t t = 0; t < z.size(); ++t) {
    const double z2 = z[t] * z[t];
    double a = p.alpha;
    if (p.family == GarchFamily::GjrGarch && z[t] > 0.0) a += p.leverage;
    s2[t + 1] = p.omega + a * z2 + p.beta * s2[t];
  }
  return s2;
}

double garch_qml_loglik(const GarchParams& p, const std::vector<double>& z, double sigma2_init) {
  const auto s2 = garch_variance_path(p, z, sigma2_init);
  constexpr double kLog2Pi = 1.8378770664093453;
  double ll = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    if (!(s2[t] > 0.0)) return -kInf;
    ll -= 0.5 * (kLog2Pi + std::log(s2[t]) + z[t] * z[t] / s2[t]);
  }
  return ll;
}

namespace {

GarchParams garch_from_theta(const std::vector<double>& th, GarchFamily family) {
  GarchParams p;
  p.family = family;
  p.omega = std::exp(th[0]);
  const double pers = logistic(th[1]);
  if (family == GarchFamily::Garch) {
    p.alpha = pers * logistic(th[2]);
    p.beta = pers - p.alpha;
    p.leverage = 0.0;
  } else {
    const double e0 = std::exp(th[2]), e1 = std::exp(th[3]);
    const double den = e0 + e1 + 1.0;
    p.alpha = pers * e0 / den;
    p.leverage = 2.0 * pers * e1 / den;
    p.beta = pers / den;
  }
  return p;
}

// gradient of the QML log-likelihood in (omega, alpha, beta, leverage)
Eigen::Vector4d garch_qml_gradient(const GarchParams& p, const std::vector<double>& z,
                                   double sigma2_init) {
  Eigen::Vector4d g = Eigen::Vector4d::Zero();
  Eigen::Vector4d ds = Eigen::Vector4d::Zero();  // d sigma2_t / d params
  double s2 = sigma2_init;
  for (std::size_t t = 0; t < z.size(); ++t) {
    const double z2 = z[t] * z[t];
    g -= 0.5 * (1.0 / s2 - z2 / (s2 * s2)) * ds;
    const bool up = p.family == GarchFamily::GjrGarch && z[t] > 0.0;
    const Eigen::Vector4d next(1.0 + p.beta * ds(0), z2 + p.beta * ds(1), s2 + p.beta * ds(2),
                               (up ? z2 : 0.0) + p.beta * ds(3));
    s2 = p.omega + (p.alpha + (up ? p.leverage : 0.0)) * z2 + p.beta * s2;
    ds = next;
  }
  return g;
}

std::vector<double> garch_start(double var, GarchFamily family) {
  // persistence 0.9 split as alpha 0.1 / beta 0.8 (gjr: 0.05 / 0.1 / 0.8)
  const double pers = 0.9;
  std::vector<double> th{std::log(var * (1.0 - pers)), logit(pers)};
  if (family == GarchFamily::Garch) {
    th.push_back(logit(0.1 / pers));
  } else {
    th.push_back(std::log(0.05 / 0.8));
    th.push_back(std::log(0.05 / 0.8));
  }
  return th;
}

}  // namespace

MarginFit fit_marginal(const std::vector<double>& z, GarchFamily family) {
  if (z.size() < 250) throw InsufficientDataError("fit_marginal: need at least 250 observations");
  for (double v : z)
    if (!std::isfinite(v)) throw DomainError("fit_marginal: non-finite observation");
  const double var = sample_variance(z);
  if (!(var > 0.0)) throw DomainError("fit_marginal: constant series");

  // fit on the unit-variance series so estimates scale exactly with the data
  const double sd = std::sqrt(var);
  std::vector<double> zn(z.size());
  for (std::size_t t = 0; t < z.size(); ++t) zn[t] = z[t] / sd;
  Objective obj = [&](const std::vector<double>& th) {
    return -garch_qml_loglik(garch_from_theta(th, family), zn, 1.0);
  };
  MinResult r = minimize_with_restarts(obj, garch_start(1.0, family), 0x6a4c, "fit_marginal");
  Gradient grad = [&](const std::vector<double>& th) {
    const GarchParams p = garch_from_theta(th, family);
    const Eigen::Vector4d gp = garch_qml_gradient(p, zn, 1.0);
    Eigen::VectorXd g(th.size());
    constexpr double h = 1e-7;
    for (std::size_t i = 0; i < th.size(); ++i) {
      std::vector<double> a = th, b = th;
      a[i] += h;
      b[i] -= h;
      const GarchParams pa = garch_from_theta(a, family), pb = garch_from_theta(b, family);
      const Eigen::Vector4d col((pa.omega - pb.omega) / (2 * h), (pa.alpha - pb.alpha) / (2 * h),
                                (pa.beta - pb.beta) / (2 * h), (pa.leverage - pb.leverage) / (2 * h));
      g(static_cast<Eigen::Index>(i)) = -gp.dot(col);
    }
    return g;
  };
  newton_polish(obj, grad, r);

  MarginFit fit;
  fit.params = garch_from_theta(r.x, family);
  fit.sigma2_init = var;
  const double shift = static_cast<double>(z.size()) * std::log(sd);
  fit.loglik = -r.fmin - shift;
  fit.trace = r.trace;
  for (double& v : fit.trace) v = -v - shift;
  const auto s2 = garch_variance_path(fit.params, zn, 1.0);
  fit.params.omega *= var;
  fit.sigma.resize(s2.size());
  for (std::size_t t = 0; t < s2.size(); ++t) fit.sigma[t] = sd * std::sqrt(s2[t]);
  fit.resid.resize(z.size());
  for (std::size_t t = 0; t < z.size(); ++t) fit.resid[t] = zn[t] / std::sqrt(s2[t]);
  return fit;
}

std::vector<double> pit_transform(const std::vector<double>& residuals) {
  const std::size_t n = residuals.size();
  if (n < 2) throw InsufficientDataError("pit_transform: need at least 2 residuals");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return residuals[a] < residuals[b]; });
  std::vector<double> u(n);
  // ties share the largest rank, matching the empirical cdf
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && residuals[idx[j + 1]] == residuals[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) u[idx[k]] = static_cast<double>(j + 1) / (n + 1);
    i = j + 1;
  }
  return u;
}

// --------------------------------------------------------------------- GAS

namespace {

constexpr double kFClamp = 50.0;
constexpr double kScoreStep = 1e-5;

/// Part of the copula log-density that depends on rho, on latent coordinates.
double rho_part(double df, double z1, double z2, double rho) {
  const double r2 = 1.0 - rho * rho;
  const double q = z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2;
  if (std::isinf(df)) return -0.5 * std::log(r2) - 0.5 * (q / r2 - z1 * z1 - z2 * z2);
  return -0.5 * std::log(r2) - 0.5 * (df + 2.0) * std::log1p(q / (df * r2));
}

double log_density_const(double df) {
  if (std::isinf(df)) return 0.0;
  return std::lgamma(0.5 * (df + 2.0)) + std::lgamma(0.5 * df) -
         2.0 * std::lgamma(0.5 * (df + 1.0));
}

double latent_score(double df, double f, double z1, double z2) {
  return (rho_part(df, z1, z2, gas_link(f + kScoreStep)) -
          rho_part(df, z1, z2, gas_link(f - kScoreStep))) /
         (2.0 * kScoreStep);
}

struct LatentPits {
  std::vector<double> z1, z2;
  std::vector<double> margin;  // margin_part per period
};

double latent(double df, double u) {
  return std::isinf(df) ? norm_quantile(u) : t_quantile(df, u);
}

/// Index of the pit columns into their distinct values folded onto (0, 1/2];
/// built once, then latent tables for any df cost one quantile per value.
class LatentMap {
 public:
  LatentMap(const std::vector<double>& u1, const std::vector<double>& u2) {
    std::vector<double> all;
    all.reserve(2 * u1.size());
    for (const auto* col : {&u1, &u2})
      for (double u : *col) all.push_back(std::min(u, 1.0 - u));
    uniq_ = all;
    std::sort(uniq_.begin(), uniq_.end());
    uniq_.erase(std::unique(uniq_.begin(), uniq_.end()), uniq_.end());
    n_ = u1.size();
    idx_.reserve(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto k = std::lower_bound(uniq_.begin(), uniq_.end(), all[i]) - uniq_.begin();
      const double u = i < n_ ? u1[i] : u2[i - n_];
      idx_.push_back(u > 0.5 ? -static_cast<long>(k) - 1 : static_cast<long>(k));
    }
  }

  LatentPits table(double df) const {
    std::vector<double> zq(uniq_.size()), mq(uniq_.size(), 0.0);
    for (std::size_t i = 0; i < uniq_.size(); ++i) {
      zq[i] = latent(df, uniq_[i]);
      if (!std::isinf(df)) mq[i] = 0.5 * (df + 1.0) * std::log1p(zq[i] * zq[i] / df);
    }
    LatentPits lp;
    lp.z1.resize(n_);
    lp.z2.resize(n_);
    lp.margin.assign(n_, 0.0);
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      const long k = idx_[i];
      const double z = k >= 0 ? zq[k] : -zq[-k - 1];
      (i < n_ ? lp.z1[i] : lp.z2[i - n_]) = z;
      lp.margin[i < n_ ? i : i - n_] += mq[k >= 0 ? k : -k - 1];
    }
    return lp;
  }

 private:
  std::vector<double> uniq_;
  std::vector<long> idx_;
  std::size_t n_ = 0;
};

LatentPits to_latent(double df, const std::vector<double>& u1, const std::vector<double>& u2) {
  return LatentMap(u1, u2).table(df);
}

void check_pits(const std::vector<double>& u1, const std::vector<double>& u2) {
  if (u1.size() != u2.size()) throw DomainError("pit columns differ in length");
  for (std::size_t t = 0; t < u1.size(); ++t)
    if (!(u1[t] > 0.0 && u1[t] < 1.0 && u2[t] > 0.0 && u2[t] < 1.0))
      throw DomainError("pits must lie in the open unit square (period " + std::to_string(t) + ")");
}

void check_gas(const GasCopulaParams& p) {
  if (!(std::abs(p.beta) < 1.0)) throw DomainError("GAS beta must satisfy |beta| < 1");
  if (!(p.df > 0.0)) throw DomainError("copula df must be positive");
}

struct LatentFilter {
  GasPath path;
  double loglik = 0.0;
};

LatentFilter filter_latent(const GasCopulaParams& p, const LatentPits& lp) {
  const std::size_t n = lp.z1.size();
  LatentFilter out;
  auto& path = out.path;
  path.f.resize(n + 1);
  path.rho.resize(n + 1);
  double f = p.omega / (1.0 - p.beta);
  out.loglik = n * log_density_const(p.df);
  for (std::size_t t = 0;; ++t) {
    if (std::abs(f) > kFClamp) {
      f = std::copysign(kFClamp, f);
      path.clamped = true;
    }
    path.f[t] = f;
    path.rho[t] = gas_link(f);
    if (t == n) break;
    const double z1 = lp.z1[t], z2 = lp.z2[t];
    out.loglik += rho_part(p.df, z1, z2, path.rho[t]) + lp.margin[t];
    const double s = p.alpha == 0.0 ? 0.0 : latent_score(p.df, f, z1, z2);
    f = p.omega + p.alpha * s + p.beta * f;
  }
  return out;
}

}  // namespace

double gas_score(const GasCopulaParams& p, double f, double u1, double u2) {
  return latent_score(p.df, f, latent(p.df, u1), latent(p.df, u2));
}

GasPath gas_filter(const GasCopulaParams& p, const std::vector<double>& u1,
                   const std::vector<double>& u2) {
  check_gas(p);
  check_pits(u1, u2);
  return filter_latent(p, to_latent(p.df, u1, u2)).path;
}

double gas_copula_loglik(const GasCopulaParams& p, const std::vector<double>& u1,
                         const std::vector<double>& u2) {
  check_gas(p);
  check_pits(u1, u2);
  return filter_latent(p, to_latent(p.df, u1, u2)).loglik;
}

namespace {

constexpr double kDfMin = 1.0;
constexpr double kDfSpan = 199.0;

GasCopulaParams gas_from_theta(const std::vector<double>& th, CopulaFamily family) {
  GasCopulaParams p;
  p.omega = th[0];
  p.alpha = std::exp(th[1]);
  p.beta = std::tanh(th[2]);
  p.df = family == CopulaFamily::Gaussian ? kInf : kDfMin + kDfSpan * logistic(th[3]);
  return p;
}

}  // namespace

CopulaFit fit_copula(const std::vector<double>& u1, const std::vector<double>& u2,
                     CopulaFamily family) {
  check_pits(u1, u2);
  const std::size_t n = u1.size();
  if (n < 250) throw InsufficientDataError("fit_copula: need at least 250 observations");

  // start from the normal-scores correlation
  const LatentPits ns = LatentMap(u1, u2).table(kInf);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    sxy += ns.z1[t] * ns.z2[t];
    sxx += ns.z1[t] * ns.z1[t];
    syy += ns.z2[t] * ns.z2[t];
  }
  const double r0 = std::clamp(sxy / std::sqrt(sxx * syy), -0.95, 0.95);
  const double b0 = 0.95;
  std::vector<double> start{gas_link_inverse(r0) * (1.0 - b0), std::log(0.05), std::atanh(b0)};
  if (family == CopulaFamily::StudentT) start.push_back(logit((8.0 - kDfMin) / kDfSpan));

  // latent quantiles depend on df only; cache the last table
  const LatentMap map(u1, u2);
  double cached_df = std::numeric_limits<double>::quiet_NaN();
  LatentPits cache;
  auto table = [&](double df) -> const LatentPits& {
    if (std::isinf(df)) return ns;
    if (df != cached_df) {
      cache = map.table(df);
      cached_df = df;
    }
    return cache;
  };

  Objective obj = [&](const std::vector<double>& th) {
    const GasCopulaParams p = gas_from_theta(th, family);
    if (!(std::abs(p.beta) < 1.0)) return kInf;
    const LatentFilter lf = filter_latent(p, table(p.df));
    if (lf.path.clamped) return kInf;
    return -lf.loglik;
  };
  const MinResult r = minimize_with_restarts(obj, start, 0xc0b1, "fit_copula");

  CopulaFit fit;
  fit.params = gas_from_theta(r.x, family);
  const LatentFilter lf = filter_latent(fit.params, to_latent(fit.params.df, u1, u2));
  fit.loglik = lf.loglik;
  fit.path = lf.path;
  return fit;
}

FittedModel fit_model(const LossSeries& window, const ModelSpec& spec) {
  window.validate();
  FittedModel m;
  m.spec = spec;
  m.x = fit_marginal(window.x, spec.margin);
  m.y = fit_marginal(window.y, spec.margin);
  const auto u1 = pit_transform(m.x.resid);
  const auto u2 = pit_transform(m.y.resid);
  m.copula = fit_copula(u1, u2, spec.copula);
  m.resid_x = EmpiricalQuantiles(m.x.resid);
  m.resid_y = EmpiricalQuantiles(m.y.resid);
  m.loglik = m.x.loglik + m.y.loglik + m.copula.loglik;
  return m;
}

// -------------------------------------------------------------- simulation

SimulatedPath simulate_dgp(const std::pair<GarchParams, GarchParams>& margins,
                           const GasCopulaParams& copula,
                           const std::pair<Innovation, Innovation>& innovations, std::size_t n_total,
                           RngStream& rng) {
  constexpr std::size_t kBurnIn = 500;
  check_gas(copula);
  SimulatedPath out;
  for (const auto* g : {&margins.first, &margins.second}) {
    if (!(g->omega > 0.0)) throw DomainError("GARCH omega must be positive");
    if (!g->stationary()) out.warnings.push_back("nonstationary GARCH parameters");
  }
  auto init_var = [](const GarchParams& g) {
    return g.omega / (1.0 - std::min(g.persistence(), 0.999));
  };
  double s2x = init_var(margins.first);
  double s2y = init_var(margins.second);
  double f = copula.omega / (1.0 - copula.beta);
  const double df = copula.df;
  const bool gaussian = std::isinf(df);
  constexpr double kLo = 0x1p-53, kHi = 1.0 - 0x1p-53;
  bool clamped = false;

  out.series.x.reserve(n_total);
  out.series.y.reserve(n_total);
  out.rho.reserve(n_total);
  for (std::size_t t = 0; t < kBurnIn + n_total; ++t) {
    if (std::abs(f) > kFClamp) {
      f = std::copysign(kFClamp, f);
      clamped = true;
    }
    const double rho = gas_link(f);
    const double e1 = rng.normal();
    const double e2 = rho * e1 + std::sqrt(1.0 - rho * rho) * rng.normal();
    double z1 = e1, z2 = e2, u1, u2;
    if (gaussian) {
      u1 = norm_cdf(z1);
      u2 = norm_cdf(z2);
    } else {
      const double w = std::sqrt(chi2_quantile(df, rng.uniform()) / df);
      z1 /= w;
      z2 /= w;
      u1 = t_cdf(df, z1);
      u2 = t_cdf(df, z2);
    }
    u1 = std::clamp(u1, kLo, kHi);
    u2 = std::clamp(u2, kLo, kHi);
    const double x = std::sqrt(s2x) * innovations.first.quantile(u1);
    const double y = std::sqrt(s2y) * innovations.second.quantile(u2);
    if (t >= kBurnIn) {
      out.series.x.push_back(x);
      out.series.y.push_back(y);
      out.rho.push_back(rho);
    }
    auto step = [](const GarchParams& g, double s2, double z) {
      double a = g.alpha;
      if (g.family == GarchFamily::GjrGarch && z > 0.0) a += g.leverage;
      return g.omega + a * z * z + g.beta * s2;
    };
    s2x = step(margins.first, s2x, x);
    s2y = step(margins.second, s2y, y);
    const double s = copula.alpha == 0.0 ? 0.0 : latent_score(df, f, z1, z2);
    f = copula.omega + copula.alpha * s + copula.beta * f;
  }
  if (clamped) out.warnings.push_back("GAS state clamped at |f| = 50");
  return out;
}

}  // namespace syrisk
