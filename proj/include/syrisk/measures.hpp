#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "syrisk/numerics.hpp"

namespace syrisk {

struct RiskLevels {
  double alpha = 0.95;
  double beta = 0.95;
  void validate() const;
};

/// Finite univariate law on sorted, distinct support points.
class DiscreteLaw {
 public:
  DiscreteLaw() = default;
  /// Merges duplicate values; probabilities must be positive and sum to one.
  DiscreteLaw(std::vector<std::pair<double, double>> atoms);

  double cdf(double x) const;
  /// Lower quantile inf{x : F(x) >= p}, p in [0,1). p = 0 gives the smallest atom.
  double quantile(double p) const;
  double mean() const;
  /// (1/(1-a)) * integral of the quantile over (a, 1), exact for a step quantile.
  double upper_mean(double a) const;
  /// Probability mass at exactly x.
  double mass(double x) const;

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> values_;
  std::vector<double> probs_;
  std::vector<double> cum_;
};

/// Sample-based margin: cdf k/n, left-continuous inverse.
class EmpiricalQuantiles {
 public:
  explicit EmpiricalQuantiles(std::vector<double> sample);
  double cdf(double x) const;
  double quantile(double p) const;
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// Location-scale continuous law or an empirical table.
struct Margin {
  std::variant<DistKind, EmpiricalQuantiles> law = DistKind{dist::StdNormal{}};
  double loc = 0.0;
  double scale = 1.0;

  static Margin normal(double loc = 0.0, double scale = 1.0) {
    return {DistKind{dist::StdNormal{}}, loc, scale};
  }
  static Margin empirical(std::vector<double> sample) {
    return {EmpiricalQuantiles(std::move(sample)), 0.0, 1.0};
  }
  bool continuous() const { return std::holds_alternative<DistKind>(law); }
  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double p) const;
};

struct Atom {
  double x;
  double y;
  double p;
};

class DiscreteBivariate {
 public:
  explicit DiscreteBivariate(std::vector<Atom> atoms);
  const std::vector<Atom>& atoms() const { return atoms_; }
  DiscreteLaw margin_x() const;
  DiscreteLaw margin_y() const;

 private:
  std::vector<Atom> atoms_;
};

/// Margins joined by an elliptical copula.
struct AnalyticBivariate {
  Margin x;
  Margin y;
  Copula copula;
};

/// How the conditional tail law of a mixture is formed. Joint conditions the
/// mixed cdf itself; Conditional averages the component tail laws with the
/// mixing weights, each component conditioned at the mixture's VaR.
enum class MixtureRule { Joint, Conditional };

struct AnalyticMixture {
  std::vector<std::pair<double, AnalyticBivariate>> parts;
  MixtureRule rule = MixtureRule::Joint;
};

using Bivariate = std::variant<DiscreteBivariate, AnalyticBivariate, AnalyticMixture>;

/// Law of Y given the tail event of X at level beta, with the correction for
/// an atom of X at its VaR.
class TailLaw {
 public:
  struct Component {
    double weight;
    Margin y;
    Copula copula;
    double u1;  // copula-scale conditioning level; 0 means unconditional
  };

  explicit TailLaw(DiscreteLaw law) : impl_(std::move(law)) {}
  explicit TailLaw(std::vector<Component> parts) : impl_(std::move(parts)) {}

  double cdf(double y) const;
  double quantile(double p) const;
  double mean() const;
  double upper_mean(double a) const;
  bool discrete() const { return std::holds_alternative<DiscreteLaw>(impl_); }

 private:
  double density(double y) const;
  std::variant<DiscreteLaw, std::vector<Component>> impl_;
};

double var_level(const DistKind& kind, double beta);
double var_level(const Margin& m, double beta);
double var_level(const DiscreteLaw& law, double beta);
/// VaR of the X margin of a bivariate law.
double var_level(const Bivariate& dist, double beta);

TailLaw conditional_tail_dist(const Bivariate& dist, double beta);

enum class MeasureKind { VaR, CoVaR, CoES, MES };

std::string to_string(MeasureKind k);

double systemic_measure(MeasureKind kind, const Bivariate& dist, const RiskLevels& levels);

struct CxlsResult {
  double value_f0;
  double value_f1;
  double value_mix;
  bool violated;
};

CxlsResult cxls_probe(MeasureKind kind, const Bivariate& f0, const Bivariate& f1, double lambda,
                      const RiskLevels& levels, MixtureRule rule = MixtureRule::Joint,
                      double tol = 1e-3);

}  // namespace syrisk
