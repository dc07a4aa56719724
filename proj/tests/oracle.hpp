#pragma once

// Brute-force functionals of small discrete bivariate laws, written
// independently of the library for use as test oracles.

#include <algorithm>
#include <cmath>
#include <vector>

#include "syrisk/numerics.hpp"

namespace oracle {

struct Atom {
  double x, y, p;
};

struct Law {
  std::vector<Atom> atoms;
  double alpha, beta;
};

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// Lower beta-quantile of X.
inline double var_of(const Law& l) {
  std::vector<Atom> s = l.atoms;
  std::sort(s.begin(), s.end(), [](auto& a, auto& b) { return a.x < b.x; });
  double cum = 0;
  for (const auto& a : s) {
    cum += a.p;
    if (cum >= l.beta - 1e-15) return a.x;
  }
  return s.back().x;
}

/// Y-atoms of the strict tail {X > v}, normalised, sorted by y.
inline std::vector<std::pair<double, double>> tail(const Law& l, double v) {
  std::vector<std::pair<double, double>> t;
  double m = 0;
  for (const auto& a : l.atoms)
    if (a.x > v) {
      t.emplace_back(a.y, a.p);
      m += a.p;
    }
  for (auto& e : t) e.second /= m;
  std::sort(t.begin(), t.end());
  return t;
}

inline double lower_quantile(const std::vector<std::pair<double, double>>& t, double a) {
  double cum = 0;
  for (const auto& [y, p] : t) {
    cum += p;
    if (cum >= a - 1e-15) return y;
  }
  return t.back().first;
}

inline double upper_mean(const std::vector<std::pair<double, double>>& t, double a) {
  // (1/(1-a)) * integral over (a, 1) of the step quantile
  double cum = 0, acc = 0;
  for (const auto& [y, p] : t) {
    const double lo = std::max(cum, a), hi = cum + p;
    if (hi > lo) acc += y * (hi - lo);
    cum = hi;
  }
  return acc / (1 - a);
}

inline double mean(const std::vector<std::pair<double, double>>& t) {
  double m = 0;
  for (const auto& [y, p] : t) m += y * p;
  return m;
}

/// Random law on a 0.01 grid of positive values, up to 8 atoms, with a
/// non-empty strict tail beyond the lower beta-quantile of X.
inline Law random_law(syrisk::RngStream& rng) {
  for (;;) {
    Law l;
    const int k = 3 + static_cast<int>(rng.uniform() * 6);
    double total = 0;
    for (int i = 0; i < k; ++i) {
      Atom a{round2(0.01 + 2.99 * rng.uniform()), round2(0.01 + 2.99 * rng.uniform()),
             0.05 + rng.uniform()};
      total += a.p;
      l.atoms.push_back(a);
    }
    for (auto& a : l.atoms) a.p /= total;
    l.beta = 0.3 + 0.6 * rng.uniform();
    l.alpha = 0.3 + 0.6 * rng.uniform();
    double mx = 0;
    for (auto& a : l.atoms) mx = std::max(mx, a.x);
    if (var_of(l) < mx) return l;
  }
}

}  // namespace oracle
