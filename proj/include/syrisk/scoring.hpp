#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "syrisk/measures.hpp"

namespace syrisk {

struct MoScore {
  double s1 = 0.0;
  double s2 = 0.0;
  friend MoScore operator-(MoScore a, MoScore b) { return {a.s1 - b.s1, a.s2 - b.s2}; }
  friend MoScore operator+(MoScore a, MoScore b) { return {a.s1 + b.s1, a.s2 + b.s2}; }
  friend MoScore operator*(double k, MoScore a) { return {k * a.s1, k * a.s2}; }
};

enum class Ordering { Less, Equal, Greater };

/// Lexicographic comparison of score pairs.
Ordering lex_compare(MoScore a, MoScore b);
/// a precedes or equals b lexicographically.
bool lex_le(MoScore a, MoScore b);

enum class Functional { VarCoVar, VarCoVarCoEs, VarMes, VarEs, MeanVar };

enum class Increasing { Identity, Exp, Tanh };
enum class Convex { Square, NegLog, ExpNeg };

/// Transform choices for the general score family. a-functions are zero.
/// phi unset means: -log for VarCoVarCoEs, square otherwise.
struct Canonical {
  Increasing h = Increasing::Identity;
  Increasing g = Increasing::Identity;
  std::optional<Convex> phi;
};

/// Scores with 0-homogeneous differences (log transforms); needs positive
/// VaR, and positive CoVaR/CoES/MES reports on tail days.
struct ZeroHom {};

struct ScoreSpec {
  Functional functional = Functional::VarCoVar;
  std::variant<Canonical, ZeroHom> variant = Canonical{};

  static ScoreSpec canonical(Functional f) { return {f, Canonical{}}; }
  static ScoreSpec zero_hom(Functional f) { return {f, ZeroHom{}}; }
  bool zero_hom() const { return std::holds_alternative<ZeroHom>(variant); }
  Convex phi() const;
  void validate() const;
};

std::string to_string(Functional f);
Functional functional_from_string(const std::string& s);

/// Per-period report. For VarEs, (v, e) are VaR and ES of x at level beta;
/// for MeanVar, mu is the mean and e the variance of x.
struct ForecastTuple {
  double v = 0.0;
  std::optional<double> c;
  std::optional<double> e;
  std::optional<double> mu;
  RiskLevels levels;
};

struct Obs {
  double x = 0.0;
  double y = 0.0;
};

double score_var(double v, Obs obs, double beta, const ScoreSpec& spec,
                 std::optional<std::size_t> period = std::nullopt);

double score_systemic(const ForecastTuple& f, Obs obs, const ScoreSpec& spec,
                      std::optional<std::size_t> period = std::nullopt);

MoScore mo_score(const ForecastTuple& f, Obs obs, const ScoreSpec& spec,
                 std::optional<std::size_t> period = std::nullopt);

/// Composite ((r1, r2), y) -> (s1(r1, y), family(r1)(r2, y)).
template <class S1, class Family>
auto lex_compose(S1 s1, Family family) {
  return [s1 = std::move(s1), family = std::move(family)](const auto& r1, const auto& r2,
                                                          const auto& y) {
    return MoScore{s1(r1, y), family(r1)(r2, y)};
  };
}

}  // namespace syrisk
