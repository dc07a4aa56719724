#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace syrisk {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI when it reports failures as JSON.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

/// Root finder was handed an interval without a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "bracket_error"; }
};

/// Non-finite evaluation or failed numerical procedure.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric_error"; }
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "insufficient_data"; }
};

/// Covariance matrix that stays singular after repair.
class DegenerateCovarianceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate_covariance"; }
};

/// Optimizer failed to converge after all restarts.
class EstimationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "estimation_error"; }
};

/// Score evaluated outside its domain (e.g. log of a nonpositive forecast).
/// Carries the offending period when the score was part of a series.
class ScoreDomainError : public DomainError {
 public:
  explicit ScoreDomainError(const std::string& what,
                            std::optional<std::size_t> period = std::nullopt)
      : DomainError(period ? what + " (period " + std::to_string(*period) + ")" : what),
        period_(period) {}
  const char* kind() const noexcept override { return "score_domain_error"; }
  std::optional<std::size_t> period() const noexcept { return period_; }

 private:
  std::optional<std::size_t> period_;
};

/// Malformed input data (CSV rows, JSON documents).
class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data_error"; }
};

class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage_error"; }
};

}  // namespace syrisk
