#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "syrisk/measures.hpp"
#include "syrisk/numerics.hpp"
#include "syrisk/series.hpp"

namespace syrisk {

enum class GarchFamily { Garch, GjrGarch };
enum class CopulaFamily { Gaussian, StudentT };

std::string to_string(GarchFamily f);
std::string to_string(CopulaFamily f);
GarchFamily garch_family_from_string(const std::string& s);
CopulaFamily copula_family_from_string(const std::string& s);

/// sigma2_t = omega + (alpha + leverage * 1{z_{t-1} > 0}) z_{t-1}^2 + beta sigma2_{t-1}.
/// Losses are sign-flipped returns, so positive z are bad news.
struct GarchParams {
  double omega = 0.001;
  double alpha = 0.2;
  double beta = 0.79;
  double leverage = 0.0;
  GarchFamily family = GarchFamily::Garch;

  double persistence() const { return alpha + beta + 0.5 * leverage; }
  bool stationary() const { return omega > 0 && alpha >= 0 && beta >= 0 && leverage >= 0 && persistence() < 1.0; }
};

/// f_t = omega + alpha s_{t-1} + beta f_{t-1}, rho_t = tanh(f_t / 2).
struct GasCopulaParams {
  double omega = 0.001;
  double alpha = 0.1;
  double beta = 0.99;
  double df = 5.0;  // +inf for the Gaussian copula

  CopulaFamily family() const { return std::isinf(df) ? CopulaFamily::Gaussian : CopulaFamily::StudentT; }
};

/// Name of the correlation link recorded with serialized models.
inline constexpr const char* kLinkName = "tanh-half";

/// Link from the GAS state to the correlation: (1 - e^{-f}) / (1 + e^{-f}).
double gas_link(double f);
double gas_link_inverse(double rho);

/// Innovation law: a standard distribution, optionally rescaled to unit variance.
struct Innovation {
  DistKind kind = dist::StdNormal{};
  bool standardize = true;
  double quantile(double u) const;
  double scale() const;
};

struct SimulatedPath {
  LossSeries series;
  std::vector<double> rho;
  std::vector<std::string> warnings;
};

/// Simulate n_total periods after an internal burn-in of 500.
SimulatedPath simulate_dgp(const std::pair<GarchParams, GarchParams>& margins,
                           const GasCopulaParams& copula,
                           const std::pair<Innovation, Innovation>& innovations, std::size_t n_total,
                           RngStream& rng);

/// Variance recursion over z; returns n+1 values, the last one being the
/// one-step-ahead variance.
std::vector<double> garch_variance_path(const GarchParams& p, const std::vector<double>& z,
                                        double sigma2_init);

double garch_qml_loglik(const GarchParams& p, const std::vector<double>& z, double sigma2_init);

struct MarginFit {
  GarchParams params;
  double sigma2_init = 0.0;      // sample variance of the estimation window
  std::vector<double> sigma;     // n+1 entries, last is the next-period forecast
  std::vector<double> resid;     // z_t / sigma_t
  double loglik = 0.0;
  std::vector<double> trace;     // best log-likelihood per optimizer iteration (first start)
};

MarginFit fit_marginal(const std::vector<double>& z, GarchFamily family);

/// Ranks scaled by 1/(n+1).
std::vector<double> pit_transform(const std::vector<double>& residuals);

struct GasPath {
  std::vector<double> f;    // n+1 entries; f[t] uses pits up to t-1
  std::vector<double> rho;
  bool clamped = false;
};

GasPath gas_filter(const GasCopulaParams& p, const std::vector<double>& u1,
                   const std::vector<double>& u2);

/// Numeric derivative in f of the copula log-density at (u1, u2).
double gas_score(const GasCopulaParams& p, double f, double u1, double u2);

double gas_copula_loglik(const GasCopulaParams& p, const std::vector<double>& u1,
                         const std::vector<double>& u2);

struct CopulaFit {
  GasCopulaParams params;
  double loglik = 0.0;
  GasPath path;
};

CopulaFit fit_copula(const std::vector<double>& u1, const std::vector<double>& u2,
                     CopulaFamily family);

struct ModelSpec {
  GarchFamily margin = GarchFamily::Garch;
  CopulaFamily copula = CopulaFamily::StudentT;
};

struct FittedModel {
  ModelSpec spec;
  MarginFit x;
  MarginFit y;
  CopulaFit copula;
  EmpiricalQuantiles resid_x{std::vector<double>{0.0}};
  EmpiricalQuantiles resid_y{std::vector<double>{0.0}};
  double loglik = 0.0;
};

FittedModel fit_model(const LossSeries& window, const ModelSpec& spec);

}  // namespace syrisk
