#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsbrown/potential.hpp"

namespace qsb {

/// Index-addressed view of the covariance a_{kl} (1-based, symmetric).
///
/// The matrices are conceptually infinite; a finite `extent` marks the largest
/// index that can be queried. Requests past it throw IndexUnavailable.
class Covariance {
 public:
  enum class Kind { IdentityHalf, Dense, Function };
  static constexpr int kUnbounded = std::numeric_limits<int>::max();

  /// 2A = identity.
  static Covariance identity_half();
  /// Entries a_{kl} = a(k-1, l-1); extent = rows.
  static Covariance dense(Eigen::MatrixXd a);
  static Covariance from_function(std::function<double(int, int)> fn, int extent);

  double operator()(int k, int l) const;
  int extent() const { return extent_; }
  Kind kind() const { return kind_; }
  const Eigen::MatrixXd& dense_data() const { return dense_; }

 private:
  Kind kind_ = Kind::IdentityHalf;
  int extent_ = kUnbounded;
  Eigen::MatrixXd dense_;
  std::function<double(int, int)> fn_;
};

/// Interaction coefficients r_{lk}, zero outside the band k <= l <= k+d-1.
class Interaction {
 public:
  enum class Kind { Delta, Banded, Function };
  static constexpr int kUnbounded = Covariance::kUnbounded;

  /// r_{lk} = 1{l == k}.
  static Interaction delta();
  /// rows[k-1][j] = r_{(k+j) k}, j = 0..d-1; extent = rows.size().
  static Interaction banded(std::vector<std::vector<double>> rows);
  /// fn(l, k) is only consulted inside the band; extent bounds k.
  static Interaction from_function(std::function<double(int, int)> fn, int extent);

  /// r_{lk}; `d` is the band width of the owning spec.
  double operator()(int l, int k, int d) const;
  int extent() const { return extent_; }
  Kind kind() const { return kind_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

 private:
  Kind kind_ = Kind::Delta;
  int extent_ = kUnbounded;
  std::vector<std::vector<double>> rows_;
  std::function<double(int, int)> fn_;
};

/// mu_1..mu_{k0}; mu_k = mu_{k0} for k >= k0.
struct Drifts {
  std::vector<double> values;
  int k0 = 1;

  static Drifts constant(double mu) { return Drifts{{mu}, 1}; }
  double operator()(int k) const;
};

/// A finite-K truncation of the hierarchical particle system.
struct ModelSpec {
  int K = 1;
  int d = 1;
  Covariance covariance = Covariance::identity_half();
  Interaction interaction = Interaction::delta();
  Drifts drifts = Drifts::constant(0.0);
  Potential potential = Potential::zero();

  double a(int k, int l) const { return covariance(k, l); }
  double r(int l, int k) const { return interaction(l, k, d); }
  double mu(int k) const { return drifts(k); }

  /// Same infinite system, truncated at a different K.
  ModelSpec with_K(int new_K) const;

  /// Throws ConfigError on structurally invalid fields (K, d, drifts).
  void check_structure() const;
};

/// Stable 64-bit hash of the canonical JSON form of a spec.
std::uint64_t spec_hash(const ModelSpec& spec);

struct ValidationEntry {
  std::string condition;
  int k = 0;
  int l = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_error = 0.0;
  bool pass = true;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  double tolerance = 0.0;

  bool pass() const;
  std::vector<ValidationEntry> failures() const;
};

inline constexpr double kDefaultValidationTolerance = 1e-9;

/// Checks the skew-symmetry relations between a and r, the normalizations,
/// covariance symmetry, and positive definiteness of (a_kl)_{k,l<=K}.
ValidationReport validate_skew_symmetry(const ModelSpec& spec,
                                        double tol = kDefaultValidationTolerance);

struct NuVector;

/// Numerically confirms that every spacing measure k = 1..K+d-1 is
/// normalizable with finite second moment and finite Fisher information.
/// Throws DivergentIntegral(k, which) on the first failure.
ValidationReport validate_measure_conditions(const ModelSpec& spec, const NuVector& nu);

}  // namespace qsb
