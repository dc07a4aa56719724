#include "syrisk/scoring.hpp"

#include <cmath>
#include <sstream>

namespace syrisk {

Ordering lex_compare(MoScore a, MoScore b) {
  if (std::isnan(a.s1) || std::isnan(a.s2) || std::isnan(b.s1) || std::isnan(b.s2))
    throw DomainError("lex_compare: NaN score");
  if (a.s1 < b.s1) return Ordering::Less;
  if (a.s1 > b.s1) return Ordering::Greater;
  if (a.s2 < b.s2) return Ordering::Less;
  if (a.s2 > b.s2) return Ordering::Greater;
  return Ordering::Equal;
}

bool lex_le(MoScore a, MoScore b) { return lex_compare(a, b) != Ordering::Greater; }

std::string to_string(Functional f) {
  switch (f) {
    case Functional::VarCoVar:
      return "var-covar";
    case Functional::VarCoVarCoEs:
      return "var-covar-coes";
    case Functional::VarMes:
      return "var-mes";
    case Functional::VarEs:
      return "var-es";
    case Functional::MeanVar:
      return "mean-var";
  }
  return "?";
}

Functional functional_from_string(const std::string& s) {
  for (auto f : {Functional::VarCoVar, Functional::VarCoVarCoEs, Functional::VarMes,
                 Functional::VarEs, Functional::MeanVar})
    if (to_string(f) == s) return f;
  throw UsageError("unknown score functional '" + s + "'");
}

Convex ScoreSpec::phi() const {
  if (const auto* c = std::get_if<Canonical>(&variant); c && c->phi) return *c->phi;
  return functional == Functional::VarCoVarCoEs ? Convex::NegLog : Convex::Square;
}

void ScoreSpec::validate() const {
  if (zero_hom()) {
    if (functional == Functional::VarEs || functional == Functional::MeanVar)
      throw DomainError("0-homogeneous variant is not available for " + to_string(functional));
    return;
  }
  if (functional == Functional::VarCoVarCoEs && phi() == Convex::Square)
    throw DomainError("CoES score needs a convex phi with negative derivative");
}

namespace {

double apply(Increasing t, double z) {
  switch (t) {
    case Increasing::Identity:
      return z;
    case Increasing::Exp:
      return std::exp(z);
    case Increasing::Tanh:
      return std::tanh(z);
  }
  return z;
}

double checked_log(double z, const char* what, std::optional<std::size_t> period) {
  if (!(z > 0.0)) {
    std::ostringstream os;
    os << "log of nonpositive " << what << " (" << z << ")";
    throw ScoreDomainError(os.str(), period);
  }
  return std::log(z);
}

struct PhiEval {
  double value;
  double deriv;
};

PhiEval eval_phi(Convex phi, double z, std::optional<std::size_t> period) {
  switch (phi) {
    case Convex::Square:
      return {z * z, 2.0 * z};
    case Convex::NegLog:
      return {-checked_log(z, "report under phi = -log", period), -1.0 / z};
    case Convex::ExpNeg: {
      const double e = std::exp(-z);
      return {e, -e};
    }
  }
  return {0, 0};
}

double require(const std::optional<double>& v, const char* name) {
  if (!v) throw DomainError(std::string("forecast is missing the ") + name + " component");
  if (!std::isfinite(*v)) throw DomainError(std::string("forecast ") + name + " is not finite");
  return *v;
}

}  // namespace

double score_var(double v, Obs obs, double beta, const ScoreSpec& spec,
                 std::optional<std::size_t> period) {
  const bool hit = obs.x <= v;
  if (spec.zero_hom()) {
    // h = log and a = log(x); the log(x) terms cancel except on days x > v.
    const double lv = checked_log(v, "VaR forecast", period);
    return ((hit ? 1.0 : 0.0) - beta) * lv + (hit ? 0.0 : checked_log(obs.x, "x", period));
  }
  const Increasing h = std::get<Canonical>(spec.variant).h;
  return ((hit ? 1.0 : 0.0) - beta) * apply(h, v) - (hit ? apply(h, obs.x) : 0.0);
}

double score_systemic(const ForecastTuple& f, Obs obs, const ScoreSpec& spec,
                      std::optional<std::size_t> period) {
  spec.validate();
  const double alpha = f.levels.alpha;
  const double beta = f.levels.beta;

  if (spec.functional == Functional::VarEs) {
    const double q = f.v;
    const double es = require(f.e, "ES");
    const bool hit = obs.x <= q;
    const double target = ((hit ? 0.0 : obs.x) + q * ((hit ? 1.0 : 0.0) - beta)) / (1.0 - beta);
    const Convex phi = spec.phi();
    if (phi == Convex::Square) return (es - target) * (es - target);
    const auto p = eval_phi(phi, es, period);
    return p.deriv * (es - target) - p.value;
  }
  if (spec.functional == Functional::MeanVar) {
    const double m = require(f.mu, "mean");
    const double var = require(f.e, "variance");
    const double dev2 = (obs.x - m) * (obs.x - m);
    const Convex phi = spec.phi();
    if (phi == Convex::Square) return (var - dev2) * (var - dev2);
    const auto p = eval_phi(phi, var, period);
    return p.deriv * (var - dev2) - p.value;
  }

  if (!(obs.x > f.v)) return 0.0;
  // ZeroHom scores subtract log x on tail days so differences stay
  // scale-free even when the two VaR forecasts select different tails
  const auto lx = [&] { return checked_log(obs.x, "x", period); };
  const bool below = obs.y <= f.c.value_or(0.0);

  switch (spec.functional) {
    case Functional::VarCoVar: {
      const double c = require(f.c, "CoVaR");
      if (spec.zero_hom()) {
        return ((below ? 1.0 : 0.0) - alpha) * checked_log(c, "CoVaR forecast", period) +
               (below ? 0.0 : checked_log(obs.y, "y", period)) - (1.0 - alpha) * lx();
      }
      const Increasing g = std::get<Canonical>(spec.variant).g;
      return ((below ? 1.0 : 0.0) - alpha) * apply(g, c) - (below ? apply(g, obs.y) : 0.0);
    }
    case Functional::VarCoVarCoEs: {
      const double c = require(f.c, "CoVaR");
      const double e = require(f.e, "CoES");
      if (spec.zero_hom()) {
        const double le = checked_log(e, "CoES forecast", period);
        return ((below ? 0.0 : (obs.y - c) / e) + (1.0 - alpha) * (c / e - 1.0 + le - lx())) /
               (1.0 - alpha);
      }
      const Increasing g = std::get<Canonical>(spec.variant).g;
      const auto p = eval_phi(spec.phi(), e, period);
      const double target =
          ((below ? 0.0 : obs.y) + c * ((below ? 1.0 : 0.0) - alpha)) / (1.0 - alpha);
      return ((below ? 1.0 : 0.0) - alpha) * apply(g, c) - (below ? apply(g, obs.y) : 0.0) +
             p.deriv * (e - target) - p.value;
    }
    case Functional::VarMes: {
      const double mu = require(f.mu, "MES");
      if (spec.zero_hom()) {
        // phi = -log
        return obs.y / mu - 1.0 + checked_log(mu, "MES forecast", period) - lx();
      }
      const auto p = eval_phi(spec.phi(), mu, period);
      return p.deriv * (mu - obs.y) - p.value;
    }
    default:
      break;
  }
  throw DomainError("score_systemic: unsupported functional");
}

MoScore mo_score(const ForecastTuple& f, Obs obs, const ScoreSpec& spec,
                 std::optional<std::size_t> period) {
  if (!std::isfinite(obs.x) || !std::isfinite(obs.y)) throw DomainError("non-finite observation");
  if (!std::isfinite(f.v)) throw DomainError("non-finite VaR forecast");
  spec.validate();
  double s1;
  if (spec.functional == Functional::VarEs) {
    const bool hit = obs.x <= f.v;
    s1 = ((hit ? 1.0 : 0.0) - f.levels.beta) * (f.v - obs.x);
  } else if (spec.functional == Functional::MeanVar) {
    const double m = require(f.mu, "mean");
    s1 = (m - obs.x) * (m - obs.x);
  } else {
    s1 = score_var(f.v, obs, f.levels.beta, spec, period);
  }
  return {s1, score_systemic(f, obs, spec, period)};
}

}  // namespace syrisk
