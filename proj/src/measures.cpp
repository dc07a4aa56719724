#include "syrisk/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace syrisk {

namespace {

constexpr double kQuantileSlack = 1e-12;

double clamp_unit(double u) { return std::clamp(u, 0x1.0p-53, 1.0 - 0x1.0p-53); }

}  // namespace

void RiskLevels::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("beta must lie in [0,1)");
}

// ---------------------------------------------------------------- DiscreteLaw

DiscreteLaw::DiscreteLaw(std::vector<std::pair<double, double>> atoms) {
  std::map<double, double> merged;
  double total = 0.0;
  for (const auto& [v, p] : atoms) {
    if (!std::isfinite(v) || !std::isfinite(p)) throw DomainError("DiscreteLaw: non-finite atom");
    if (p < 0.0) throw DomainError("DiscreteLaw: negative probability");
    if (p == 0.0) continue;
    merged[v] += p;
    total += p;
  }
  if (merged.empty()) throw DomainError("DiscreteLaw: no atoms with positive mass");
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "DiscreteLaw: probabilities sum to " << total;
    throw DomainError(os.str());
  }
  double acc = 0.0;
  for (const auto& [v, p] : merged) {
    values_.push_back(v);
    probs_.push_back(p);
    acc += p;
    cum_.push_back(acc);
  }
  cum_.back() = 1.0;
}

double DiscreteLaw::cdf(double x) const {
  auto it = std::upper_bound(values_.begin(), values_.end(), x);
  if (it == values_.begin()) return 0.0;
  return cum_[static_cast<std::size_t>(it - values_.begin()) - 1];
}

double DiscreteLaw::quantile(double p) const {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("DiscreteLaw::quantile: p must lie in [0,1)");
  auto it = std::lower_bound(cum_.begin(), cum_.end(), p - kQuantileSlack);
  if (it == cum_.end()) return values_.back();
  return values_[static_cast<std::size_t>(it - cum_.begin())];
}

double DiscreteLaw::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) m += values_[i] * probs_[i];
  return m;
}

double DiscreteLaw::upper_mean(double a) const {
  if (!(a >= 0.0 && a < 1.0)) throw DomainError("DiscreteLaw::upper_mean: level must lie in [0,1)");
  double acc = 0.0;
  double lo = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double hi = cum_[i];
    const double len = hi - std::max(lo, a);
    if (len > 0) acc += values_[i] * len;
    lo = hi;
  }
  return acc / (1.0 - a);
}

double DiscreteLaw::mass(double x) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), x);
  if (it == values_.end() || *it != x) return 0.0;
  return probs_[static_cast<std::size_t>(it - values_.begin())];
}

// --------------------------------------------------------------- empirical

EmpiricalQuantiles::EmpiricalQuantiles(std::vector<double> sample) : sorted_(std::move(sample)) {
  if (sorted_.empty()) throw InsufficientDataError("empirical margin needs at least one value");
  for (double v : sorted_)
    if (!std::isfinite(v)) throw DomainError("empirical margin: non-finite value");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalQuantiles::cdf(double x) const {
  const auto k = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return static_cast<double>(k) / static_cast<double>(sorted_.size());
}

double EmpiricalQuantiles::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("empirical quantile: p must lie in [0,1]");
  const double n = static_cast<double>(sorted_.size());
  auto k = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
  if (k == 0) k = 1;
  return sorted_[std::min(k, sorted_.size()) - 1];
}

double Margin::cdf(double x) const {
  if (auto* e = std::get_if<EmpiricalQuantiles>(&law)) return e->cdf((x - loc) / scale);
  return syrisk::cdf(std::get<DistKind>(law), (x - loc) / scale);
}

double Margin::pdf(double x) const {
  if (!continuous()) throw DomainError("empirical margin has no density");
  return syrisk::pdf(std::get<DistKind>(law), (x - loc) / scale) / scale;
}

double Margin::quantile(double p) const {
  if (auto* e = std::get_if<EmpiricalQuantiles>(&law)) return loc + scale * e->quantile(p);
  return loc + scale * syrisk::quantile(std::get<DistKind>(law), p);
}

// --------------------------------------------------------------- bivariate

DiscreteBivariate::DiscreteBivariate(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw DomainError("DiscreteBivariate: no atoms");
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(a.p))
      throw DomainError("DiscreteBivariate: non-finite atom");
    if (!(a.p > 0.0)) throw DomainError("DiscreteBivariate: probabilities must be positive");
    total += a.p;
  }
  if (std::abs(total - 1.0) > 1e-12 * std::max<double>(1.0, atoms_.size() / 1e3)) {
    std::ostringstream os;
    os << "DiscreteBivariate: probabilities sum to " << total;
    throw DomainError(os.str());
  }
}

DiscreteLaw DiscreteBivariate::margin_x() const {
  std::vector<std::pair<double, double>> v;
  v.reserve(atoms_.size());
  for (const auto& a : atoms_) v.emplace_back(a.x, a.p);
  return DiscreteLaw(std::move(v));
}

DiscreteLaw DiscreteBivariate::margin_y() const {
  std::vector<std::pair<double, double>> v;
  v.reserve(atoms_.size());
  for (const auto& a : atoms_) v.emplace_back(a.y, a.p);
  return DiscreteLaw(std::move(v));
}

// ----------------------------------------------------------------- TailLaw

namespace {

double component_cdf(const TailLaw::Component& c, double y) {
  const double u2 = c.y.cdf(y);
  if (c.u1 <= 0.0) return u2;
  if (u2 <= 0.0) return 0.0;
  if (u2 >= 1.0) return 1.0;
  return 1.0 - copula_survival(c.copula, c.u1, u2) / (1.0 - c.u1);
}

double component_quantile(const TailLaw::Component& c, double p) {
  if (c.u1 <= 0.0) return c.y.quantile(p);
  auto g = [&](double u2) { return 1.0 - copula_survival(c.copula, c.u1, u2) / (1.0 - c.u1) - p; };
  const double u2 = find_root(g, 1e-15, 1.0 - 1e-15, 1e-15);
  return c.y.quantile(u2);
}

void require_integrable(const Margin& m) {
  if (auto* k = std::get_if<DistKind>(&m.law)) {
    if (auto* t = std::get_if<dist::StudentT>(k); t && t->df <= 1.0)
      throw NumericError("tail mean does not exist for a t margin with df <= 1");
  }
}

}  // namespace

double TailLaw::cdf(double y) const {
  if (auto* d = std::get_if<DiscreteLaw>(&impl_)) return d->cdf(y);
  double acc = 0.0;
  for (const auto& c : std::get<std::vector<Component>>(impl_)) acc += c.weight * component_cdf(c, y);
  return std::clamp(acc, 0.0, 1.0);
}

double TailLaw::density(double y) const {
  double acc = 0.0;
  for (const auto& c : std::get<std::vector<Component>>(impl_)) {
    const double f = c.y.pdf(y);
    if (f == 0.0) continue;
    if (c.u1 <= 0.0) {
      acc += c.weight * f;
      continue;
    }
    const double z2 = latent_quantile(c.copula, clamp_unit(c.y.cdf(y)));
    const double z1 = latent_quantile(c.copula, c.u1);
    acc += c.weight * f * copula_hbar_latent(c.copula, z1, z2) / (1.0 - c.u1);
  }
  return acc;
}

double TailLaw::quantile(double p) const {
  if (auto* d = std::get_if<DiscreteLaw>(&impl_)) return d->quantile(p);
  if (!(p > 0.0 && p < 1.0)) throw DomainError("TailLaw::quantile: p must lie in (0,1)");
  const auto& parts = std::get<std::vector<Component>>(impl_);
  if (parts.size() == 1) return component_quantile(parts.front(), p);
  double lo = kInf, hi = -kInf;
  for (const auto& c : parts) {
    const double q = component_quantile(c, p);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (hi - lo < 1e-13) return lo;
  return find_root([&](double y) { return cdf(y) - p; }, lo, hi, 1e-12);
}

double TailLaw::upper_mean(double a) const {
  if (auto* d = std::get_if<DiscreteLaw>(&impl_)) return d->upper_mean(a);
  if (!(a >= 0.0 && a < 1.0)) throw DomainError("TailLaw::upper_mean: level must lie in [0,1)");
  for (const auto& c : std::get<std::vector<Component>>(impl_)) require_integrable(c.y);
  const double lo = a > 0.0 ? quantile(a) : -kInf;
  auto f = [&](double y) { return y * density(y); };
  double v;
  if (a > 0.0) {
    v = integrate_adaptive(f, lo, kInf, 1e-12);
  } else {
    // split at the median region so both halves are one-sided
    const double m = quantile(0.5);
    v = integrate_adaptive(f, -kInf, m, 1e-12) + integrate_adaptive(f, m, kInf, 1e-12);
  }
  v /= (1.0 - a);
  if (!std::isfinite(v)) throw NumericError("tail mean is not finite");
  return v;
}

double TailLaw::mean() const { return upper_mean(0.0); }

// --------------------------------------------------------------------- VaR

namespace {

void require_beta(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("beta must lie in [0,1)");
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_mixture(const AnalyticMixture& m) {
  if (m.parts.empty()) throw DomainError("mixture has no components");
  double total = 0.0;
  for (const auto& [w, d] : m.parts) {
    if (!(w > 0.0)) throw DomainError("mixture weights must be positive");
    if (!d.x.continuous() || !d.y.continuous())
      throw DomainError("mixture components need continuous margins");
    validate(d.copula);
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture weights must sum to one");
}

}  // namespace

double var_level(const DistKind& kind, double beta) {
  require_beta(beta);
  if (beta == 0.0) return std::holds_alternative<dist::StdNormal>(kind) ||
                                  std::holds_alternative<dist::StudentT>(kind)
                              ? -kInf
                              : 0.0;
  return quantile(kind, beta);
}

double var_level(const Margin& m, double beta) {
  require_beta(beta);
  if (auto* e = std::get_if<EmpiricalQuantiles>(&m.law)) return m.loc + m.scale * e->quantile(beta);
  return m.loc + m.scale * var_level(std::get<DistKind>(m.law), beta);
}

double var_level(const DiscreteLaw& law, double beta) {
  require_beta(beta);
  return law.quantile(beta);
}

double var_level(const Bivariate& dist, double beta) {
  require_beta(beta);
  return std::visit(
      Overloaded{
          [&](const DiscreteBivariate& d) { return var_level(d.margin_x(), beta); },
          [&](const AnalyticBivariate& d) { return var_level(d.x, beta); },
          [&](const AnalyticMixture& m) {
            validate_mixture(m);
            if (beta == 0.0) return -kInf;
            double lo = kInf, hi = -kInf;
            for (const auto& [w, d] : m.parts) {
              const double q = var_level(d.x, beta);
              lo = std::min(lo, q);
              hi = std::max(hi, q);
            }
            if (hi - lo < 1e-14) return lo;
            auto f = [&](double v) {
              double acc = 0.0;
              for (const auto& [w, d] : m.parts) acc += w * d.x.cdf(v);
              return acc - beta;
            };
            return find_root(f, lo, hi, 1e-13);
          },
      },
      dist);
}

// --------------------------------------------------------- conditional tail

namespace {

TailLaw discrete_tail(const DiscreteBivariate& d, double beta) {
  const DiscreteLaw mx = d.margin_x();
  const double v = mx.quantile(beta);
  const double at_v = mx.mass(v);
  // share of the atom at VaR that belongs to the tail event
  const double excess = std::max(0.0, mx.cdf(v) - beta);
  std::vector<std::pair<double, double>> atoms;
  for (const auto& a : d.atoms()) {
    if (a.x > v) {
      atoms.emplace_back(a.y, a.p / (1.0 - beta));
    } else if (a.x == v && excess > 0.0) {
      atoms.emplace_back(a.y, a.p * excess / (at_v * (1.0 - beta)));
    }
  }
  return TailLaw(DiscreteLaw(std::move(atoms)));
}

// Tail law with an empirical Y margin: atoms at the order statistics with
// probabilities given by increments of the conditional copula cdf.
TailLaw empirical_tail(const EmpiricalQuantiles& ey, const Margin& my, const Copula& c,
                       double beta) {
  const auto& ys = ey.sorted();
  const std::size_t n = ys.size();
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(n);
  if (beta == 0.0) {
    for (double y : ys) atoms.emplace_back(my.loc + my.scale * y, 1.0 / n);
    return TailLaw(DiscreteLaw(std::move(atoms)));
  }
  const UpperTailSection sec(beta, c.df);
  double prev = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double u = static_cast<double>(k) / n;
    const double g = k == n ? 1.0 : 1.0 - sec(c.rho, u) / (1.0 - beta);
    const double p = std::max(0.0, g - prev);
    prev = std::max(prev, g);
    atoms.emplace_back(my.loc + my.scale * ys[k - 1], p);
  }
  return TailLaw(DiscreteLaw(std::move(atoms)));
}

}  // namespace

TailLaw conditional_tail_dist(const Bivariate& dist, double beta) {
  require_beta(beta);
  return std::visit(
      Overloaded{
          [&](const DiscreteBivariate& d) { return discrete_tail(d, beta); },
          [&](const AnalyticBivariate& d) {
            validate(d.copula);
            // Conditioning is on the copula-scale event U1 > beta, which is
            // X > VaR for a continuous margin and the atom-corrected event
            // otherwise.
            if (auto* e = std::get_if<EmpiricalQuantiles>(&d.y.law))
              return empirical_tail(*e, d.y, d.copula, beta);
            return TailLaw(std::vector<TailLaw::Component>{{1.0, d.y, d.copula, beta}});
          },
          [&](const AnalyticMixture& m) {
            validate_mixture(m);
            const double v = var_level(dist, beta);
            std::vector<TailLaw::Component> parts;
            for (const auto& [w, d] : m.parts) {
              const double u1 = beta == 0.0 ? 0.0 : d.x.cdf(v);
              double weight = w;
              if (m.rule == MixtureRule::Joint) weight = w * (1.0 - u1) / (1.0 - beta);
              if (weight <= 0.0) continue;
              if (u1 >= 1.0) throw NumericError("mixture component has no tail mass at VaR");
              parts.push_back({weight, d.y, d.copula, u1});
            }
            return TailLaw(std::move(parts));
          },
      },
      dist);
}

std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::VaR:
      return "VaR";
    case MeasureKind::CoVaR:
      return "CoVaR";
    case MeasureKind::CoES:
      return "CoES";
    case MeasureKind::MES:
      return "MES";
  }
  return "?";
}

double systemic_measure(MeasureKind kind, const Bivariate& dist, const RiskLevels& levels) {
  levels.validate();
  if (kind == MeasureKind::VaR) return var_level(dist, levels.beta);
  const TailLaw tail = conditional_tail_dist(dist, levels.beta);
  switch (kind) {
    case MeasureKind::CoVaR:
      return tail.quantile(levels.alpha);
    case MeasureKind::CoES:
      return tail.upper_mean(levels.alpha);
    case MeasureKind::MES:
      return tail.mean();
    case MeasureKind::VaR:
      break;
  }
  throw DomainError("unknown measure");
}

CxlsResult cxls_probe(MeasureKind kind, const Bivariate& f0, const Bivariate& f1, double lambda,
                      const RiskLevels& levels, MixtureRule rule, double tol) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in (0,1)");
  Bivariate mix = [&]() -> Bivariate {
    const auto* d0 = std::get_if<DiscreteBivariate>(&f0);
    const auto* d1 = std::get_if<DiscreteBivariate>(&f1);
    if (d0 && d1) {
      std::vector<Atom> atoms;
      for (auto a : d0->atoms()) atoms.push_back({a.x, a.y, (1.0 - lambda) * a.p});
      for (auto a : d1->atoms()) atoms.push_back({a.x, a.y, lambda * a.p});
      return DiscreteBivariate(std::move(atoms));
    }
    const auto* a0 = std::get_if<AnalyticBivariate>(&f0);
    const auto* a1 = std::get_if<AnalyticBivariate>(&f1);
    if (a0 && a1) return AnalyticMixture{{{1.0 - lambda, *a0}, {lambda, *a1}}, rule};
    throw DomainError("cxls_probe: both laws must be discrete or both analytic");
  }();
  CxlsResult r;
  r.value_f0 = systemic_measure(kind, f0, levels);
  r.value_f1 = systemic_measure(kind, f1, levels);
  r.value_mix = systemic_measure(kind, mix, levels);
  r.violated = std::abs(r.value_f0 - r.value_f1) <= tol && std::abs(r.value_mix - r.value_f0) > tol;
  return r;
}

}  // namespace syrisk
