#include "qsbrown/model.hpp"

#include <cmath>
#include <map>

#include "qsbrown/errors.hpp"
#include "qsbrown/linalg.hpp"
#include "qsbrown/measure.hpp"
#include "qsbrown/model_json.hpp"

namespace qsb {

Covariance Covariance::identity_half() { return Covariance{}; }

Covariance Covariance::dense(Eigen::MatrixXd a) {
  if (a.rows() != a.cols()) throw ConfigError("dense covariance must be square");
  Covariance c;
  c.kind_ = Kind::Dense;
  c.extent_ = static_cast<int>(a.rows());
  c.dense_ = std::move(a);
  return c;
}

Covariance Covariance::from_function(std::function<double(int, int)> fn, int extent) {
  Covariance c;
  c.kind_ = Kind::Function;
  c.extent_ = extent;
  c.fn_ = std::move(fn);
  return c;
}

double Covariance::operator()(int k, int l) const {
  if (k < 1 || l < 1 || k > extent_ || l > extent_) throw IndexUnavailable("a", k, l);
  switch (kind_) {
    case Kind::IdentityHalf: return k == l ? 0.5 : 0.0;
    case Kind::Dense: return dense_(k - 1, l - 1);
    case Kind::Function: return fn_(k, l);
  }
  return 0.0;
}

Interaction Interaction::delta() { return Interaction{}; }

Interaction Interaction::banded(std::vector<std::vector<double>> rows) {
  Interaction r;
  r.kind_ = Kind::Banded;
  r.extent_ = static_cast<int>(rows.size());
  r.rows_ = std::move(rows);
  return r;
}

Interaction Interaction::from_function(std::function<double(int, int)> fn, int extent) {
  Interaction r;
  r.kind_ = Kind::Function;
  r.extent_ = extent;
  r.fn_ = std::move(fn);
  return r;
}

double Interaction::operator()(int l, int k, int d) const {
  if (k < 1 || l < 1) throw IndexUnavailable("r", l, k);
  if (l < k || l >= k + d) return 0.0;
  if (k > extent_) throw IndexUnavailable("r", l, k);
  switch (kind_) {
    case Kind::Delta: return l == k ? 1.0 : 0.0;
    case Kind::Banded: {
      const auto& row = rows_[static_cast<std::size_t>(k - 1)];
      const auto j = static_cast<std::size_t>(l - k);
      if (j >= row.size()) throw IndexUnavailable("r", l, k);
      return row[j];
    }
    case Kind::Function: return fn_(l, k);
  }
  return 0.0;
}

double Drifts::operator()(int k) const {
  if (k < 1) throw IndexUnavailable("mu", k, 0);
  const int idx = k < k0 ? k : k0;
  return values.at(static_cast<std::size_t>(idx - 1));
}

ModelSpec ModelSpec::with_K(int new_K) const {
  ModelSpec copy = *this;
  copy.K = new_K;
  return copy;
}

void ModelSpec::check_structure() const {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (d < 1) throw ConfigError("d must be >= 1");
  if (drifts.k0 < 1) throw ConfigError("drifts.k0 must be >= 1");
  if (drifts.values.size() < static_cast<std::size_t>(drifts.k0))
    throw ConfigError("drifts.values must hold at least k0 entries");
}

std::uint64_t spec_hash(const ModelSpec& spec) {
  const std::string canonical = to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool ValidationReport::pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

std::vector<ValidationEntry> ValidationReport::failures() const {
  std::vector<ValidationEntry> out;
  for (const auto& e : entries)
    if (!e.pass) out.push_back(e);
  return out;
}

namespace {

void add_check(ValidationReport& report, std::string condition, int k, int l, double lhs,
               double rhs, double tol) {
  const double err = std::abs(lhs - rhs);
  report.entries.push_back({std::move(condition), k, l, lhs, rhs, err, err <= tol});
}

}  // namespace

ValidationReport validate_skew_symmetry(const ModelSpec& spec, double tol) {
  spec.check_structure();
  if (!(tol > 0.0)) throw ConfigError("validation tolerance must be positive");
  ValidationReport report;
  report.tolerance = tol;
  const int n = spec.K + spec.d - 1;

  for (int k = 1; k <= n + 1; ++k)
    for (int l = k + 1; l <= n + 1; ++l)
      add_check(report, "covariance_symmetric", k, l, spec.a(k, l), spec.a(l, k), tol);

  for (int k = 1; k <= n; ++k) {
    for (int l = k + 1; l <= n; ++l) {
      add_check(report, "a_tilde_offdiagonal", k, l, a_tilde(spec, k, l),
                (spec.r(l, k) - spec.r(l, k + 1)) / 2.0, tol);
    }
  }
  for (int k = 1; k <= n; ++k) {
    add_check(report, "first_row", k, k + 1, spec.a(1, k) - spec.a(1, k + 1), spec.r(k, 1) / 2.0,
              tol);
    add_check(report, "a_tilde_diagonal", k, k, a_tilde(spec, k, k), 1.0, tol);
    add_check(report, "r_diagonal", k, k, spec.r(k, k), 1.0, tol);
  }

  ValidationEntry pd{"positive_definite", spec.K, spec.K, 0.0, 0.0, 0.0, true};
  try {
    const auto factor = cholesky(spec);
    pd.lhs = factor.lower.diagonal().minCoeff();
  } catch (const NotPositiveDefinite& e) {
    pd.k = pd.l = e.pivot();
    pd.pass = false;
  }
  report.entries.push_back(pd);
  return report;
}

ValidationReport validate_measure_conditions(const ModelSpec& spec, const NuVector& nu) {
  spec.check_structure();
  const int n = spec.K + spec.d - 1;
  if (nu.size() < n) throw ConfigError("nu must cover indices 1..K+d-1");
  constexpr double kTol = 1e-8;
  ValidationReport report;
  report.tolerance = kTol;
  std::map<double, std::shared_ptr<const SpacingMeasure>> cache;

  for (int k = 1; k <= n; ++k) {
    const double nu_k = nu(k);
    auto it = cache.find(nu_k);
    if (it == cache.end()) {
      try {
        it = cache.emplace(nu_k, std::make_shared<const SpacingMeasure>(
                                     build_measure(spec.potential, nu_k, k)))
                 .first;
      } catch (const DivergentIntegral& e) {
        if (e.index() == k) throw;
        throw DivergentIntegral(k, e.which(), e.what());
      }
    }
    const SpacingMeasure& m = *it->second;
    const bool z_ok = std::isfinite(m.partition()) && m.partition() > 0.0;
    report.entries.push_back({"partition_finite", k, k, m.partition(), m.partition(), 0.0, z_ok});
    add_check(report, "normalization", k, k, m.table_mass(), 1.0, kTol);
    const double second = m.variance() + m.mean() * m.mean();
    report.entries.push_back(
        {"second_moment_finite", k, k, second, second, 0.0, std::isfinite(second)});
    const double scale = std::max(1.0, std::abs(m.fisher()));
    report.entries.push_back({"fisher_equivalence", k, k, m.fisher(), m.fisher_alt(),
                              std::abs(m.fisher() - m.fisher_alt()),
                              std::abs(m.fisher() - m.fisher_alt()) <= kTol * scale});
  }
  return report;
}

}  // namespace qsb
