#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qsb {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed JSON, unknown preset, out-of-range parameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParameterOutOfRange : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ExpressionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A covariance or interaction entry was requested outside its defined window.
class IndexUnavailable : public ConfigError {
 public:
  IndexUnavailable(const std::string& table, int i, int j);
  int row() const { return row_; }
  int col() const { return col_; }

 private:
  int row_;
  int col_;
};

/// Failures of a numerical procedure on otherwise well-formed input.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// A spacing-measure integral (Z, second moment, Fisher form) does not converge.
class DivergentIntegral : public NumericFailure {
 public:
  DivergentIntegral(int index, std::string which, const std::string& detail);
  int index() const { return index_; }
  const std::string& which() const { return which_; }

 private:
  int index_;
  std::string which_;
};

/// Integrand blows up non-integrably at an endpoint of the support.
class NonIntegrableSingularity : public DivergentIntegral {
 public:
  using DivergentIntegral::DivergentIntegral;
};

class NotPositiveDefinite : public NumericFailure {
 public:
  explicit NotPositiveDefinite(int pivot);
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

class DiagonalNotUnit : public NumericFailure {
 public:
  DiagonalNotUnit(int k, double value);
  int index() const { return k_; }

 private:
  int k_;
};

class ResidualCheckFailed : public NumericFailure {
 public:
  explicit ResidualCheckFailed(double residual);
};

class SupportViolation : public NumericFailure {
 public:
  SupportViolation(int spacing, double value);
  int spacing() const { return spacing_; }

 private:
  int spacing_;
};

class StepStuck : public NumericFailure {
 public:
  StepStuck(std::uint64_t path, double t);
  std::uint64_t path() const { return path_; }
  double time() const { return t_; }

 private:
  std::uint64_t path_;
  double t_;
};

class FailureRateExceeded : public NumericFailure {
 public:
  FailureRateExceeded(std::uint64_t failed, std::uint64_t total);
  std::uint64_t failed() const { return failed_; }

 private:
  std::uint64_t failed_;
};

}  // namespace qsb
