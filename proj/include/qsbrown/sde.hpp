#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qsbrown/linalg.hpp"
#include "qsbrown/measure.hpp"
#include "qsbrown/model.hpp"

namespace qsb {

struct SimConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 42;
  /// Snapped to the nearest multiple of dt. Empty means {0, horizon}.
  std::vector<double> record_times;
  double floor_eps = 1e-8;
  int max_halvings = 30;
  /// Worker threads; 0 = hardware concurrency.
  unsigned threads = 0;

  void check() const;
  std::size_t steps() const;
  /// Sorted, de-duplicated step indices at which states are recorded.
  std::vector<std::size_t> record_steps() const;
};

/// Where a path's starting positions come from.
class InitialCondition {
 public:
  /// X_1 = 0 and independent spacings from the quasi-stationary law.
  static InitialCondition quasi_stationary(std::shared_ptr<const QuasiStationaryLaw> law);
  /// The same deterministic vector for every path.
  static InitialCondition fixed(std::vector<double> x);
  /// Row p for path p, or row 0 for every path when only one row is given.
  static InitialCondition per_path(Eigen::MatrixXd rows);

  std::vector<double> draw(std::uint64_t path, std::uint64_t seed) const;
  int K() const;

 private:
  enum class Kind { QuasiStationary, Fixed, PerPath };
  Kind kind_ = Kind::Fixed;
  std::shared_ptr<const QuasiStationaryLaw> law_;
  std::vector<double> fixed_;
  Eigen::MatrixXd rows_;
};

/// Drift of the K-particle system with the nu boundary terms:
/// b_k = mu_k + sum_{l=k}^{K-1} U'(x_l - x_{l+1}) r_{lk} + sum_{l=K}^{k+d-1} nu_l r_{lk}.
class DriftField {
 public:
  DriftField(const ModelSpec& spec, const NuVector& nu);

  int K() const { return K_; }
  const Potential& potential() const { return potential_; }
  double boundary(int k) const { return boundary_[static_cast<std::size_t>(k - 1)]; }

  /// Throws SupportViolation if a spacing lies outside the support.
  void evaluate(std::span<const double> x, std::span<double> out) const;

  /// Hot-loop variant: no support check; `scratch` holds K-1 values of U'.
  void evaluate_unchecked(std::span<const double> x, std::span<double> out,
                          std::span<double> scratch) const;

 private:
  int K_;
  int d_;
  Potential potential_;
  std::vector<double> mu_;
  std::vector<double> band_;      // band_[(k-1)*d + j] = r_{(k+j) k}
  std::vector<double> boundary_;
};

std::vector<double> drift(const ModelSpec& spec, const NuVector& nu, std::span<const double> x);

struct PathFailure {
  std::uint64_t path = 0;
  double time = 0.0;
};

/// Recorded states of an Euler-Maruyama ensemble.
struct PathEnsemble {
  int K = 0;
  std::vector<double> times;
  std::vector<std::size_t> record_steps;
  /// positions[r](i, k-1) = X_k of the i-th surviving path at times[r].
  std::vector<Eigen::MatrixXd> positions;
  std::vector<std::uint64_t> path_ids;
  std::uint64_t spec_hash = 0;
  SimConfig config;
  std::uint64_t halvings = 0;
  std::vector<PathFailure> failures;

  std::size_t n_paths() const { return path_ids.size(); }
  std::vector<double> position(std::size_t time_index, int k) const;
  /// Y_k = X_k - X_{k+1}.
  std::vector<double> spacing(std::size_t time_index, int k) const;
  /// (x_1, y_1, ..., y_{K-1}) of surviving path i.
  std::vector<double> state(std::size_t time_index, std::size_t i) const;
};

/// Euler-Maruyama with reject-and-halve stepping and correlated noise L xi.
/// Path p draws its noise from RandomStream(seed, p, Noise), so the output
/// does not depend on the number of worker threads.
PathEnsemble simulate(const ModelSpec& spec, const NuVector& nu, const InitialCondition& init,
                      const SimConfig& cfg);

}  // namespace qsb
