#include "qsbrown/errors.hpp"

#include <sstream>

namespace qsb {

namespace {
std::string index_message(const std::string& table, int i, int j) {
  std::ostringstream os;
  os << "index unavailable: " << table << "(" << i << "," << j << ")";
  return os.str();
}
}  // namespace

IndexUnavailable::IndexUnavailable(const std::string& table, int i, int j)
    : ConfigError(index_message(table, i, j)), row_(i), col_(j) {}

DivergentIntegral::DivergentIntegral(int index, std::string which, const std::string& detail)
    : NumericFailure("divergent integral '" + which + "' for spacing " + std::to_string(index) +
                     ": " + detail),
      index_(index),
      which_(std::move(which)) {}

NotPositiveDefinite::NotPositiveDefinite(int pivot)
    : NumericFailure("matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
      pivot_(pivot) {}

DiagonalNotUnit::DiagonalNotUnit(int k, double value)
    : NumericFailure("diagonal of 2*A~ - R~ is not 1 at k=" + std::to_string(k) + " (value " +
                     std::to_string(value) + ")"),
      k_(k) {}

ResidualCheckFailed::ResidualCheckFailed(double residual)
    : NumericFailure("nu residual check failed: max-norm residual " + std::to_string(residual)) {}

SupportViolation::SupportViolation(int spacing, double value)
    : NumericFailure("spacing y_" + std::to_string(spacing) + " = " + std::to_string(value) +
                     " lies outside the potential support"),
      spacing_(spacing) {}

StepStuck::StepStuck(std::uint64_t path, double t)
    : NumericFailure("path " + std::to_string(path) + " stuck at t=" + std::to_string(t)),
      path_(path),
      t_(t) {}

FailureRateExceeded::FailureRateExceeded(std::uint64_t failed, std::uint64_t total)
    : NumericFailure(std::to_string(failed) + " of " + std::to_string(total) +
                     " paths failed (limit 0.1%)"),
      failed_(failed) {}

}  // namespace qsb
