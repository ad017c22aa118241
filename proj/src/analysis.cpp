#include "qsbrown/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "qsbrown/errors.hpp"
#include "qsbrown/measure.hpp"
#include "qsbrown/random.hpp"
#include "qsbrown/stats.hpp"
#include "qsbrown/version.hpp"

namespace qsb {

namespace {

std::string fmt_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

// nlohmann writes NaN and infinities as null; keep them recoverable.
nlohmann::json encode_real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double decode_real(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  throw ConfigError("report: bad real value '" + s + "'");
}

TestEntry within(std::string name, double observed, double expected, double tolerance) {
  const bool ok = std::isfinite(observed) && std::abs(observed - expected) <= tolerance;
  return {std::move(name), observed, expected, tolerance, ok};
}

TestEntry ks_entry(std::string name, double statistic, double critical) {
  return {std::move(name), statistic, 0.0, critical, std::isfinite(statistic) && statistic < critical};
}

TestReport new_report(std::string id, const ModelSpec& spec) {
  TestReport r;
  r.test_id = std::move(id);
  r.tool_version = kToolVersion;
  r.spec_hash = spec_hash(spec);
  return r;
}

std::vector<double> column(const Eigen::MatrixXd& m, int k) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, k - 1);
  return out;
}

std::vector<double> gaps(const Eigen::MatrixXd& m, int k) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, k - 1) - m(i, k);
  return out;
}

}  // namespace

bool TestReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const TestEntry& e) { return e.pass; });
}

std::vector<TestEntry> TestReport::failures() const {
  std::vector<TestEntry> out;
  for (const auto& e : entries)
    if (!e.pass) out.push_back(e);
  return out;
}

nlohmann::json to_json(const TestReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries)
    entries.push_back({{"name", e.name},
                       {"observed", encode_real(e.observed)},
                       {"expected", encode_real(e.expected)},
                       {"tolerance", encode_real(e.tolerance)},
                       {"pass", e.pass}});
  return {{"test_id", report.test_id},
          {"pass", report.pass()},
          {"entries", entries},
          {"sample_sizes", report.sample_sizes},
          {"seeds", report.seeds},
          {"tool_version", report.tool_version},
          {"spec_hash", report.spec_hash},
          {"details", report.details}};
}

TestReport report_from_json(const nlohmann::json& j) {
  TestReport r;
  r.test_id = j.at("test_id").get<std::string>();
  for (const auto& e : j.at("entries"))
    r.entries.push_back({e.at("name").get<std::string>(), decode_real(e.at("observed")),
                         decode_real(e.at("expected")), decode_real(e.at("tolerance")),
                         e.at("pass").get<bool>()});
  r.sample_sizes = j.at("sample_sizes").get<std::map<std::string, std::uint64_t>>();
  r.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
  r.tool_version = j.at("tool_version").get<std::string>();
  r.spec_hash = j.at("spec_hash").get<std::uint64_t>();
  if (j.contains("details")) r.details = j.at("details");
  return r;
}

TestFunction TestFunction::coordinate(int i) {
  if (i < 0) throw ConfigError("test function index must be non-negative");
  TestFunction f;
  f.kind_ = Kind::Coordinate;
  f.i_ = i;
  return f;
}

TestFunction TestFunction::quadratic(int i, int j) {
  if (i < 0 || j < 0) throw ConfigError("test function index must be non-negative");
  TestFunction f;
  f.kind_ = Kind::Quadratic;
  f.i_ = std::min(i, j);
  f.j_ = std::max(i, j);
  return f;
}

namespace {

int parse_coordinate(const std::string& s) {
  if (s == "x_1" || s == "x1") return 0;
  if (s.size() >= 2 && s[0] == 'y') {
    const std::string digits = s[1] == '_' ? s.substr(2) : s.substr(1);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit)) {
      const int k = std::stoi(digits);
      if (k >= 1) return k;
    }
  }
  throw ConfigError("unknown test-function coordinate '" + s + "' (use x_1 or y_k)");
}

}  // namespace

TestFunction TestFunction::parse(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.size() > 2 && s.substr(s.size() - 2) == "^2") {
    const int i = parse_coordinate(s.substr(0, s.size() - 2));
    return quadratic(i, i);
  }
  if (const auto star = s.find('*'); star != std::string::npos)
    return quadratic(parse_coordinate(s.substr(0, star)), parse_coordinate(s.substr(star + 1)));
  return coordinate(parse_coordinate(s));
}

int TestFunction::max_index() const { return kind_ == Kind::Coordinate ? i_ : j_; }

std::string TestFunction::name() const {
  auto coord = [](int i) { return i == 0 ? std::string("x_1") : "y_" + std::to_string(i); };
  if (kind_ == Kind::Coordinate) return coord(i_);
  if (i_ == j_) return coord(i_) + "^2";
  return coord(i_) + "*" + coord(j_);
}

double TestFunction::value(std::span<const double> s) const {
  const auto i = static_cast<std::size_t>(i_);
  if (kind_ == Kind::Coordinate) return s[i];
  return s[i] * s[static_cast<std::size_t>(j_)];
}

std::vector<double> TestFunction::gradient(std::span<const double> s) const {
  std::vector<double> g(s.size(), 0.0);
  const auto i = static_cast<std::size_t>(i_);
  const auto j = static_cast<std::size_t>(j_);
  if (kind_ == Kind::Coordinate) {
    g[i] = 1.0;
  } else {
    g[i] += s[j];
    g[j] += s[i];
  }
  return g;
}

std::vector<double> TestFunction::hessian(std::size_t n) const {
  std::vector<double> h(n * n, 0.0);
  if (kind_ == Kind::Quadratic) {
    const auto i = static_cast<std::size_t>(i_);
    const auto j = static_cast<std::size_t>(j_);
    h[i * n + j] += 1.0;
    h[j * n + i] += 1.0;
  }
  return h;
}

GeneratorTerms generator_terms(const ModelSpec& spec, const NuVector& nu, const TestFunction& f,
                               std::span<const double> point) {
  const int K = spec.K;
  const int d = spec.d;
  if (point.size() != static_cast<std::size_t>(K))
    throw ConfigError("generator: point must have length K");
  if (f.max_index() >= K) throw ConfigError("generator: test function refers to a missing coordinate");
  if (nu.size() < K + d - 1) throw ConfigError("generator: nu must cover indices 1..K+d-1");

  std::vector<double> du(static_cast<std::size_t>(K), 0.0);  // du[l] = U'(y_l)
  for (int l = 1; l < K; ++l) {
    const double y = point[static_cast<std::size_t>(l)];
    if (!spec.potential.in_support(y)) throw SupportViolation(l, y);
    du[static_cast<std::size_t>(l)] = spec.potential.derivative(y);
  }
  std::vector<double> b(static_cast<std::size_t>(K) + 1, 0.0);  // b[k], 1-based
  for (int k = 1; k <= K; ++k) {
    double v = spec.mu(k);
    for (int l = k; l <= std::min(K - 1, k + d - 1); ++l) v += du[static_cast<std::size_t>(l)] * spec.r(l, k);
    for (int l = std::max(K, k); l <= k + d - 1; ++l) v += nu(l) * spec.r(l, k);
    b[static_cast<std::size_t>(k)] = v;
  }

  const auto n = static_cast<std::size_t>(K);
  const auto g = f.gradient(point);
  GeneratorTerms out;
  out.first_order = g[0] * b[1];
  for (int k = 1; k < K; ++k)
    out.first_order += g[static_cast<std::size_t>(k)] * (b[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k) + 1]);

  if (!f.is_linear()) {
    const auto h = f.hessian(n);
    auto H = [&](int i, int j) { return h[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)]; };
    double s = 0.5 * spec.a(1, 1) * H(0, 0);
    for (int k = 1; k < K; ++k) s += (spec.a(1, k) - spec.a(1, k + 1)) * H(0, k);
    for (int k = 1; k < K; ++k)
      for (int l = 1; l < K; ++l) s += 0.5 * a_tilde(spec, k, l) * H(k, l);
    out.second_order = s;
  }
  return out;
}

double generator_apply(const ModelSpec& spec, const NuVector& nu, const TestFunction& f,
                       std::span<const double> point) {
  return generator_terms(spec, nu, f, point).total();
}

TestReport test_quasi_stationarity(const PathEnsemble& ensemble, const ModelSpec& spec,
                                   const NuVector& nu) {
  if (ensemble.K != spec.K) throw ConfigError("ensemble and model disagree on K");
  TestReport report = new_report("quasi_stationarity", spec);
  report.sample_sizes["paths"] = ensemble.n_paths();
  report.seeds["simulation"] = ensemble.config.seed;
  report.details["failed_paths"] = ensemble.failures.size();
  report.details["halvings"] = ensemble.halvings;

  const QuasiStationaryLaw law(spec, nu);
  double x1_rate = spec.mu(1);
  for (int l = 1; l <= spec.d; ++l) x1_rate += spec.r(l, 1) * nu(l);
  const double a11 = spec.a(1, 1);

  for (std::size_t r = 0; r < ensemble.times.size(); ++r) {
    const double t = ensemble.times[r];
    const std::string tag = "t=" + fmt_time(t) + " ";
    const auto& m = ensemble.positions[r];
    if (ensemble.record_steps[r] == 0) {
      const double worst = m.rows() > 0 ? m.col(0).cwiseAbs().maxCoeff() : 0.0;
      report.entries.push_back(within(tag + "x_1 dirac", worst, 0.0, 0.0));
      continue;
    }
    for (int k = 1; k < spec.K; ++k) {
      const auto& mu_k = law.measure(k);
      auto ys = gaps(m, k);
      const auto mom = moments(ys);
      const std::string name = tag + "y_" + std::to_string(k);
      report.entries.push_back(within(name + " mean", mom.mean, mu_k.mean(), 3.0 * mom.mean_se()));
      report.entries.push_back(within(name + " variance", mom.variance, mu_k.variance(), 3.0 * mom.variance_se()));
      const double D = ks_statistic(std::move(ys), [&](double z) { return mu_k.cdf(z); });
      report.entries.push_back(ks_entry(name + " ks", D, ks_critical_one_sample(mom.n)));
    }
    const auto x1 = column(m, 1);
    const auto mom = moments(x1);
    report.entries.push_back(within(tag + "x_1 mean", mom.mean, x1_rate * t, 3.0 * mom.mean_se()));
    report.entries.push_back(within(tag + "x_1 variance", mom.variance, a11 * t, 3.0 * mom.variance_se()));
  }
  return report;
}

TestReport test_consistency(const ModelSpec& spec, const NuVector& nu, int J, int K,
                            const SimConfig& cfg, const ConsistencyOptions& options) {
  if (J < 1 || J >= K) throw ConfigError("consistency test needs 1 <= J < K");
  if (nu.size() < K + spec.d - 1) throw ConfigError("nu must cover indices 1..K+d-1");
  const ModelSpec big = spec.with_K(K);
  const ModelSpec small = spec.with_K(J);
  const NuVector& direct_nu = options.direct_nu ? *options.direct_nu : nu;

  SimConfig cfg_proj = cfg;
  SimConfig cfg_direct = cfg;
  cfg_proj.seed = mix_seed(cfg.seed, 1);
  cfg_direct.seed = mix_seed(cfg.seed, 2);
  if (options.swap_seeds) std::swap(cfg_proj.seed, cfg_direct.seed);

  const auto law_big = std::make_shared<const QuasiStationaryLaw>(big, nu);
  const auto law_small = std::make_shared<const QuasiStationaryLaw>(small, direct_nu);
  const PathEnsemble proj = simulate(big, nu, InitialCondition::quasi_stationary(law_big), cfg_proj);
  const PathEnsemble direct =
      simulate(small, direct_nu, InitialCondition::quasi_stationary(law_small), cfg_direct);

  TestReport report = new_report("consistency", big);
  report.sample_sizes["projected"] = proj.n_paths();
  report.sample_sizes["direct"] = direct.n_paths();
  report.seeds["base"] = cfg.seed;
  report.seeds["projected"] = cfg_proj.seed;
  report.seeds["direct"] = cfg_direct.seed;
  report.details["J"] = J;
  report.details["K"] = K;
  report.details["direct_nu_overridden"] = options.direct_nu.has_value();
  report.details["failed_paths"] = {{"projected", proj.failures.size()}, {"direct", direct.failures.size()}};

  const double crit = ks_critical_two_sample(proj.n_paths(), direct.n_paths());
  for (std::size_t r = 0; r < proj.times.size(); ++r) {
    if (proj.record_steps[r] == 0) continue;
    const std::string tag = "t=" + fmt_time(proj.times[r]) + " ";
    const auto& a = proj.positions[r];
    const auto& b = direct.positions[r];
    report.entries.push_back(
        ks_entry(tag + "x_1 ks", ks_two_sample_statistic(column(a, 1), column(b, 1)), crit));
    for (int k = 1; k < J; ++k)
      report.entries.push_back(ks_entry(tag + "y_" + std::to_string(k) + " ks",
                                        ks_two_sample_statistic(gaps(a, k), gaps(b, k)), crit));
  }
  return report;
}

namespace {

struct ResidualStats {
  double mean = 0.0;
  double se = 0.0;
  double net_mean = 0.0;
  double net_se = 0.0;
  double integral_mean = 0.0;
  std::size_t n = 0;
};

ResidualStats residuals(const ModelSpec& spec, const NuVector& nu, const TestFunction& f,
                        const PathEnsemble& ens) {
  if (ens.K != spec.K) throw ConfigError("ensemble and model disagree on K");
  const std::size_t nt = ens.times.size();
  if (nt < 2 || ens.record_steps.front() != 0)
    throw ConfigError("martingale residual needs records from t=0 on a grid");
  const std::size_t stride = ens.record_steps[1] - ens.record_steps[0];
  for (std::size_t r = 1; r < nt; ++r)
    if (ens.record_steps[r] - ens.record_steps[r - 1] != stride)
      throw ConfigError("martingale residual needs a uniform record grid");
  const double h = static_cast<double>(stride) * ens.config.dt;

  const std::size_t n = ens.n_paths();
  std::vector<double> res(n);
  std::vector<double> net(n);
  std::vector<double> integral(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    double f0 = 0.0;
    double fT = 0.0;
    for (std::size_t r = 0; r < nt; ++r) {
      const auto s = ens.state(r, i);
      const double lf = generator_apply(spec, nu, f, s);
      acc += (r == 0 || r + 1 == nt) ? 0.5 * lf : lf;
      if (r == 0) f0 = f.value(s);
      if (r + 1 == nt) fT = f.value(s);
    }
    integral[i] = acc * h;
    net[i] = fT - f0;
    res[i] = net[i] - integral[i];
  }
  ResidualStats out;
  const auto m = moments(res);
  const auto mn = moments(net);
  out.mean = m.mean;
  out.se = m.mean_se();
  out.net_mean = mn.mean;
  out.net_se = mn.mean_se();
  out.integral_mean = moments(integral).mean;
  out.n = n;
  return out;
}

}  // namespace

TestReport test_martingale_residual(const ModelSpec& spec, const NuVector& nu, const TestFunction& f,
                                    const PathEnsemble& ensemble, const PathEnsemble* half_step) {
  TestReport report = new_report("martingale_residual", spec);
  const auto main = residuals(spec, nu, f, ensemble);
  report.sample_sizes["paths"] = main.n;
  report.seeds["simulation"] = ensemble.config.seed;

  double allowance = 0.0;
  nlohmann::json details = {{"function", f.name()},
                            {"standard_error", main.se},
                            {"net_change_mean", main.net_mean},
                            {"net_change_standard_error", main.net_se},
                            {"integral_mean", main.integral_mean},
                            {"dt", ensemble.config.dt}};
  if (half_step) {
    const auto fine = residuals(spec, nu, f, *half_step);
    allowance = std::abs(2.0 * (main.mean - fine.mean));
    report.sample_sizes["half_step_paths"] = fine.n;
    report.seeds["half_step_simulation"] = half_step->config.seed;
    details["half_step_residual"] = fine.mean;
    details["half_step_standard_error"] = fine.se;
  }
  details["discretization_allowance"] = allowance;
  report.details = details;
  report.entries.push_back(
      within("residual " + f.name(), main.mean, 0.0, 3.0 * main.se + allowance));
  return report;
}

}  // namespace qsb
