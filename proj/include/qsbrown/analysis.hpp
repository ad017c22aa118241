#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsbrown/linalg.hpp"
#include "qsbrown/model.hpp"
#include "qsbrown/sde.hpp"

namespace qsb {

struct TestEntry {
  std::string name;
  double observed = 0.0;
  double expected = 0.0;
  /// Allowed |observed - expected|, or the critical value for KS entries.
  double tolerance = 0.0;
  bool pass = false;
};

struct TestReport {
  std::string test_id;
  std::vector<TestEntry> entries;
  std::map<std::string, std::uint64_t> sample_sizes;
  std::map<std::string, std::uint64_t> seeds;
  std::string tool_version;
  std::uint64_t spec_hash = 0;
  /// Free-form diagnostics that do not enter the verdict.
  nlohmann::json details = nlohmann::json::object();

  bool pass() const;
  std::vector<TestEntry> failures() const;
};

nlohmann::json to_json(const TestReport& report);
TestReport report_from_json(const nlohmann::json& j);

/// f on the state s = (x_1, y_1, ..., y_{K-1}); index 0 is x_1, index k is y_k.
class TestFunction {
 public:
  static TestFunction coordinate(int i);
  static TestFunction quadratic(int i, int j);
  /// "x_1", "y_3", "x_1^2", "x_1*y_2".
  static TestFunction parse(const std::string& text);

  bool is_linear() const { return kind_ == Kind::Coordinate; }
  int max_index() const;
  std::string name() const;

  double value(std::span<const double> s) const;
  std::vector<double> gradient(std::span<const double> s) const;
  /// Dense row-major n x n Hessian.
  std::vector<double> hessian(std::size_t n) const;

 private:
  enum class Kind { Coordinate, Quadratic };
  Kind kind_ = Kind::Coordinate;
  int i_ = 0;
  int j_ = 0;
};

struct GeneratorTerms {
  double first_order = 0.0;
  double second_order = 0.0;
  double total() const { return first_order + second_order; }
};

/// (L_K f)(point), split into drift and diffusion contributions.
GeneratorTerms generator_terms(const ModelSpec& spec, const NuVector& nu, const TestFunction& f,
                               std::span<const double> point);
double generator_apply(const ModelSpec& spec, const NuVector& nu, const TestFunction& f,
                       std::span<const double> point);

/// z-tests on spacing moments, KS tests against the spacing CDF, and
/// moment tests on X_1 at every record time t > 0. At t = 0 X_1 must be 0.
TestReport test_quasi_stationarity(const PathEnsemble& ensemble, const ModelSpec& spec,
                                   const NuVector& nu);

struct ConsistencyOptions {
  /// Boundary terms used by the direct J-particle run; defaults to nu.
  std::optional<NuVector> direct_nu;
  /// Exchange the seeds of the two runs.
  bool swap_seeds = false;
};

/// Two-sample KS tests comparing the first J coordinates of a K-particle
/// run with a direct J-particle run, both from quasi-stationary starts.
TestReport test_consistency(const ModelSpec& spec, const NuVector& nu, int J, int K,
                            const SimConfig& cfg, const ConsistencyOptions& options = {});

/// Per-path residual f(S_T) - f(S_0) - int_0^T Lf(S_s) ds with the trapezoidal
/// rule on the record grid. The optional half-step ensemble gives the
/// discretization allowance |2 (r(dt) - r(dt/2))|.
TestReport test_martingale_residual(const ModelSpec& spec, const NuVector& nu, const TestFunction& f,
                                    const PathEnsemble& ensemble,
                                    const PathEnsemble* half_step = nullptr);

}  // namespace qsb
