#include "qsbrown/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsbrown/analysis.hpp"
#include "qsbrown/catalog.hpp"
#include "qsbrown/errors.hpp"
#include "qsbrown/linalg.hpp"
#include "qsbrown/measure.hpp"
#include "qsbrown/model_json.hpp"
#include "qsbrown/random.hpp"
#include "qsbrown/sde.hpp"
#include "qsbrown/stats.hpp"
#include "qsbrown/version.hpp"

namespace qsb::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Args {
  // model source
  std::string preset;
  double beta = 6.0;
  double mu = 2.0;
  int K = 2;
  std::string model_file;
  std::string model_json;
  std::vector<double> drifts;
  // simulation
  std::uint64_t seed = 42;
  std::size_t paths = 1000;
  double dt = 1e-3;
  double horizon = 1.0;
  std::vector<double> record;
  double record_every = 0.0;
  double floor_eps = 1e-8;
  int max_halvings = 30;
  unsigned threads = 0;
  std::string init = "qs";
  // output
  std::string config;
  std::string out;
  std::string out_dir;
  bool no_timestamp = false;
  bool csv = false;
  // subcommand specific
  double tol = kDefaultValidationTolerance;
  bool skip_measure = false;
  int M = 0;
  int k = 1;
  std::size_t n = 100000;
  std::vector<double> points;
  int J = 5;
  bool zero_boundary = false;
  bool swap_seeds = false;
  std::vector<std::string> functions;
  bool no_half_step = false;
  std::string catalog_name;
};

void add_model_options(CLI::App* app, Args& a) {
  app->add_option("--preset", a.preset, "Preset name (beta_tasep, oy, free)");
  app->add_option("--beta", a.beta, "beta parameter of beta_tasep");
  app->add_option("--mu", a.mu, "mu parameter of beta_tasep / oy");
  app->add_option("--K", a.K, "Number of particles");
  app->add_option("--model", a.model_file, "Model JSON file");
  app->add_option("--model-json", a.model_json, "Inline model JSON");
  app->add_option("--drifts", a.drifts, "Override mu_1,...,mu_k0 (comma separated)")->delimiter(',');
  app->add_option("--config", a.config, "Run configuration JSON file");
}

void add_sim_options(CLI::App* app, Args& a, std::size_t default_paths) {
  a.paths = default_paths;
  app->add_option("--seed", a.seed, "Master seed");
  app->add_option("--paths", a.paths, "Number of paths");
  app->add_option("--dt", a.dt, "Time step");
  app->add_option("--horizon", a.horizon, "Final time T");
  app->add_option("--record", a.record, "Record times (comma separated)")->delimiter(',');
  app->add_option("--record-every", a.record_every, "Record on a uniform grid with this spacing");
  app->add_option("--floor-eps", a.floor_eps, "Smallest accepted spacing on the half-line");
  app->add_option("--max-halvings", a.max_halvings, "Step halvings before a path is failed");
  app->add_option("--threads", a.threads, "Worker threads (0 = auto, env QSBROWN_THREADS)");
}

void add_output_options(CLI::App* app, Args& a) {
  app->add_option("--out", a.out, "Write the JSON report here instead of stdout");
  app->add_flag("--no-timestamp", a.no_timestamp, "Omit the generation time from reports");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

/// Merges --config values into Args for every option not given on the command line.
void apply_config(const CLI::App* sub, Args& a) {
  if (a.config.empty()) return;
  const json c = read_json_file(a.config);
  auto unset = [&](const char* flag) { return sub->get_option_no_throw(flag) && sub->count(flag) == 0; };
  auto take = [&](const json& obj, const char* key, const char* flag, auto& target) {
    if (obj.contains(key) && unset(flag)) target = obj.at(key).get<std::decay_t<decltype(target)>>();
  };
  bool cli_model = !a.preset.empty() || !a.model_file.empty() || !a.model_json.empty();
  if (c.contains("model") && !cli_model) {
    const json& m = c.at("model");
    if (m.contains("preset")) a.preset = m.at("preset").get<std::string>();
    if (m.contains("file")) a.model_file = m.at("file").get<std::string>();
    if (m.contains("spec")) a.model_json = m.at("spec").dump();
    take(m, "beta", "--beta", a.beta);
    take(m, "mu", "--mu", a.mu);
    take(m, "K", "--K", a.K);
    take(m, "drifts", "--drifts", a.drifts);
  }
  if (c.contains("sim")) {
    const json& s = c.at("sim");
    take(s, "seed", "--seed", a.seed);
    take(s, "paths", "--paths", a.paths);
    take(s, "dt", "--dt", a.dt);
    take(s, "horizon", "--horizon", a.horizon);
    take(s, "record", "--record", a.record);
    take(s, "record_every", "--record-every", a.record_every);
    take(s, "floor_eps", "--floor-eps", a.floor_eps);
    take(s, "max_halvings", "--max-halvings", a.max_halvings);
    take(s, "threads", "--threads", a.threads);
  }
  take(c, "out_dir", "--out-dir", a.out_dir);
  take(c, "out", "--out", a.out);
}

struct ResolvedModel {
  ModelSpec spec;
  json source;
};

ResolvedModel resolve_model(const CLI::App* sub, const Args& a) {
  const int sources = (!a.preset.empty()) + (!a.model_file.empty()) + (!a.model_json.empty());
  if (sources == 0) throw ConfigError("no model given (use --preset, --model or --model-json)");
  if (sources > 1) throw ConfigError("give exactly one of --preset, --model, --model-json");
  ResolvedModel r;
  if (!a.preset.empty()) {
    std::map<std::string, double> params;
    const auto& info = preset_info(a.preset);
    if (info.defaults.count("beta")) params["beta"] = a.beta;
    if (info.defaults.count("mu")) params["mu"] = a.mu;
    if (!info.defaults.count("beta") && sub->count("--beta"))
      throw ConfigError("preset '" + a.preset + "' takes no --beta");
    if (!info.defaults.count("mu") && sub->count("--mu"))
      throw ConfigError("preset '" + a.preset + "' takes no --mu");
    r.spec = make_preset(a.preset, params, a.K);
    r.source = {{"preset", a.preset}, {"parameters", params}, {"K", a.K}};
  } else {
    json j;
    if (!a.model_file.empty()) {
      j = read_json_file(a.model_file);
      r.source = {{"file", a.model_file}};
    } else {
      try {
        j = json::parse(a.model_json);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("--model-json: ") + e.what());
      }
      r.source = {{"inline", true}};
    }
    r.spec = model_from_json(j);
    if (sub->count("--K")) r.spec = r.spec.with_K(a.K);
  }
  if (!a.drifts.empty()) {
    r.spec.drifts = Drifts{a.drifts, static_cast<int>(a.drifts.size())};
    r.source["drifts"] = a.drifts;
  }
  r.spec.check_structure();
  return r;
}

unsigned resolve_threads(const CLI::App* sub, const Args& a) {
  if (sub->count("--threads") || !a.config.empty()) return a.threads;
  if (const char* env = std::getenv("QSBROWN_THREADS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      throw ConfigError(std::string("QSBROWN_THREADS is not a number: ") + env);
    }
  }
  return 0;
}

SimConfig make_sim_config(const CLI::App* sub, const Args& a) {
  SimConfig cfg;
  cfg.dt = a.dt;
  cfg.horizon = a.horizon;
  cfg.n_paths = a.paths;
  cfg.seed = a.seed;
  cfg.floor_eps = a.floor_eps;
  cfg.max_halvings = a.max_halvings;
  cfg.threads = resolve_threads(sub, a);
  if (!a.record.empty() && a.record_every > 0.0)
    throw ConfigError("give either --record or --record-every");
  if (a.record_every < 0.0) throw ConfigError("--record-every must be positive");
  if (a.record_every > 0.0) {
    const auto n = static_cast<long long>(std::llround(a.horizon / a.record_every));
    for (long long i = 0; i <= n; ++i) cfg.record_times.push_back(std::min(a.horizon, static_cast<double>(i) * a.record_every));
  } else {
    cfg.record_times = a.record;
  }
  cfg.check();
  return cfg;
}

json sim_config_json(const SimConfig& cfg) {
  std::vector<double> times;
  for (auto s : cfg.record_steps()) times.push_back(static_cast<double>(s) * cfg.dt);
  return {{"dt", cfg.dt},
          {"horizon", cfg.horizon},
          {"paths", cfg.n_paths},
          {"seed", cfg.seed},
          {"record_times", times},
          {"floor_eps", cfg.floor_eps},
          {"max_halvings", cfg.max_halvings}};
}

void ensure_writable_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  const fs::path probe = fs::path(dir) / ".qsbrown_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
}

void check_out_file(const std::string& path) {
  if (path.empty()) return;
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) ensure_writable_dir(parent.string());
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void emit(json report, const Args& a, std::ostream& out, const std::string& path) {
  if (!a.no_timestamp) report["generated_at"] = timestamp();
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

json header(const std::string& command, const ModelSpec* spec, std::optional<std::uint64_t> seed) {
  json j = {{"command", command}, {"tool_version", kToolVersion}};
  if (spec) j["spec_hash"] = spec_hash(*spec);
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

json validation_json(const ValidationReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"condition", e.condition},
                       {"k", e.k},
                       {"l", e.l},
                       {"lhs", e.lhs},
                       {"rhs", e.rhs},
                       {"abs_error", e.abs_error},
                       {"pass", e.pass}});
  return {{"pass", r.pass()}, {"tolerance", r.tolerance}, {"entries", entries}};
}

void print_failures(const ValidationReport& r, std::ostream& err) {
  for (const auto& e : r.failures())
    err << "FAIL " << e.condition << " k=" << e.k << " l=" << e.l << " lhs=" << e.lhs
        << " rhs=" << e.rhs << " error=" << e.abs_error << "\n";
}

void print_failures(const TestReport& r, std::ostream& err) {
  for (const auto& e : r.failures())
    err << "FAIL " << r.test_id << ": " << e.name << " observed=" << e.observed
        << " expected=" << e.expected << " tolerance=" << e.tolerance << "\n";
}

json with_header(const json& head, const json& body) {
  json j = head;
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  return j;
}

int cmd_validate(const CLI::App* sub, const Args& a, std::ostream& out, std::ostream& err) {
  check_out_file(a.out);
  const auto m = resolve_model(sub, a);
  const auto skew = validate_skew_symmetry(m.spec, a.tol);
  json j = header("validate", &m.spec, std::nullopt);
  j["model_source"] = m.source;
  j["skew_symmetry"] = validation_json(skew);
  bool ok = skew.pass();
  print_failures(skew, err);
  if (ok && !a.skip_measure) {
    const NuVector nu = solve_nu(m.spec);
    const auto meas = validate_measure_conditions(m.spec, nu);
    j["nu"] = nu.values;
    j["measure_conditions"] = validation_json(meas);
    print_failures(meas, err);
    ok = meas.pass();
  }
  j["pass"] = ok;
  emit(j, a, out, a.out);
  return ok ? kOk : kTestFailed;
}

int cmd_nu(const CLI::App* sub, const Args& a, std::ostream& out, std::ostream&) {
  check_out_file(a.out);
  const auto m = resolve_model(sub, a);
  const NuVector nu = a.M > 0 ? solve_nu(m.spec, a.M) : solve_nu(m.spec);
  json j = header("nu", &m.spec, std::nullopt);
  j["model_source"] = m.source;
  j["nu"] = nu.values;
  j["residual"] = nu.residual;
  emit(j, a, out, a.out);
  return kOk;
}

NuVector nu_covering(const ModelSpec& spec, int k) {
  return solve_nu(spec, std::max(k, spec.K + spec.d - 1));
}

int cmd_measure(const CLI::App* sub, const Args& a, std::ostream& out, std::ostream&) {
  check_out_file(a.out);
  const auto m = resolve_model(sub, a);
  if (a.k < 1) throw ConfigError("--k must be at least 1");
  const NuVector nu = nu_covering(m.spec, a.k);
  const SpacingMeasure s = build_measure(m.spec.potential, nu(a.k), a.k);
  json j = header("measure", &m.spec, std::nullopt);
  j["model_source"] = m.source;
  j["k"] = a.k;
  j["nu_k"] = s.nu();
  j["support"] = to_string(s.support());
  j["partition"] = s.partition();
  j["mean"] = s.mean();
  j["variance"] = s.variance();
  j["fisher"] = s.fisher();
  j["fisher_alt"] = s.fisher_alt();
  j["table_mass"] = s.table_mass();
  j["window"] = {s.lo(), s.hi()};
  json table = json::array();
  for (double z : a.points) table.push_back({{"z", z}, {"density", s.density(z)}, {"cdf", s.cdf(z)}});
  if (!a.points.empty()) j["points"] = table;
  emit(j, a, out, a.out);
  return kOk;
}

int cmd_sample(const CLI::App* sub, const Args& a, std::ostream& out, std::ostream& err) {
  check_out_file(a.out);
  if (a.csv) ensure_writable_dir(a.out_dir.empty() ? "." : a.out_dir);
  const auto m = resolve_model(sub, a);
  if (a.k < 1) throw ConfigError("--k must be at least 1");
  if (a.n == 0) throw ConfigError("--n must be positive");
  const NuVector nu = nu_covering(m.spec, a.k);
  const SpacingMeasure s = build_measure(m.spec.potential, nu(a.k), a.k);
  RandomStream rng(a.seed, static_cast<std::uint64_t>(a.k), StreamPurpose::Sampling);
  std::vector<double> draws(a.n);
  for (auto& x : draws) x = sample_spacing(s, rng);
  if (a.csv) {
    const fs::path path = fs::path(a.out_dir.empty() ? "." : a.out_dir) / "samples.csv";
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << "y_" << a.k << "\n";
    char buf[40];
    for (double x : draws) {
      std::snprintf(buf, sizeof buf, "%.17g\n", x);
      f << buf;
    }
  }
  const auto mom = moments(draws);
  TestReport r;
  r.test_id = "sampler";
  r.tool_version = kToolVersion;
  r.spec_hash = spec_hash(m.spec);
  r.sample_sizes["draws"] = a.n;
  r.seeds["sampling"] = a.seed;
  const double D = ks_statistic(draws, [&](double z) { return s.cdf(z); });
  const double crit = ks_critical_one_sample(a.n);
  r.entries.push_back({"y_" + std::to_string(a.k) + " ks", D, 0.0, crit, D < crit});
  r.details = {{"k", a.k},
               {"sample_mean", mom.mean},
               {"sample_variance", mom.variance},
               {"measure_mean", s.mean()},
               {"measure_variance", s.variance()}};
  print_failures(r, err);
  emit(with_header(header("sample", &m.spec, a.seed), to_json(r)), a, out, a.out);
  return r.pass() ? kOk : kTestFailed;
}

InitialCondition make_initial_condition(const Args& a, const ModelSpec& spec, const NuVector& nu) {
  if (a.init == "qs") return InitialCondition::quasi_stationary(std::make_shared<const QuasiStationaryLaw>(spec, nu));
  if (a.init == "ladder") {
    std::vector<double> x(static_cast<std::size_t>(spec.K));
    for (int k = 0; k < spec.K; ++k) x[static_cast<std::size_t>(k)] = -static_cast<double>(k);
    return InitialCondition::fixed(std::move(x));
  }
  if (a.init.rfind("file:", 0) == 0) {
    const std::string path = a.init.substr(5);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open initial positions '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      bool numeric = true;
      while (std::getline(ss, cell, ',')) {
        try {
          std::size_t used = 0;
          row.push_back(std::stod(cell, &used));
        } catch (const std::exception&) {
          numeric = false;
          break;
        }
      }
      if (!numeric) {
        if (rows.empty()) continue;  // header
        throw ConfigError("non-numeric entry in '" + path + "'");
      }
      if (row.size() != static_cast<std::size_t>(spec.K))
        throw ConfigError("initial positions must have K columns");
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("initial positions file '" + path + "' has no rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), spec.K);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int k = 0; k < spec.K; ++k)
        m(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
    return InitialCondition::per_path(std::move(m));
  }
  throw ConfigError("--init must be qs, ladder or file:PATH");
}

json ensemble_summary(const PathEnsemble& ens) {
  json times = json::array();
  for (std::size_t r = 0; r < ens.times.size(); ++r) {
    json xs = json::array();
    json ys = json::array();
    for (int k = 1; k <= ens.K; ++k) {
      const auto mom = moments(ens.position(r, k));
      xs.push_back({{"k", k}, {"mean", mom.mean}, {"variance", mom.variance}});
      if (k < ens.K) {
        const auto my = moments(ens.spacing(r, k));
        ys.push_back({{"k", k}, {"mean", my.mean}, {"variance", my.variance}});
      }
    }
    times.push_back({{"time", ens.times[r]}, {"x", xs}, {"y", ys}});
  }
  json failures = json::array();
  for (const auto& f : ens.failures) failures.push_back({{"path", f.path}, {"time", f.time}});
  return {{"paths", ens.n_paths()}, {"halvings", ens.halvings}, {"failures", failures}, {"moments", times}};
}

void write_paths_csv(const PathEnsemble& ens, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << "path,time";
  for (int k = 1; k <= ens.K; ++k) f << ",x_" << k;
  f << "\n";
  char buf[40];
  for (std::size_t i = 0; i < ens.n_paths(); ++i) {
    for (std::size_t r = 0; r < ens.times.size(); ++r) {
      f << ens.path_ids[i];
      std::snprintf(buf, sizeof buf, ",%.17g", ens.times[r]);
      f << buf;
      for (int k = 0; k < ens.K; ++k) {
        std::snprintf(buf, sizeof buf, ",%.17g", ens.positions[r](static_cast<Eigen::Index>(i), k));
        f << buf;
      }
      f << "\n";
    }
  }
}

int cmd_simulate(const CLI::App* sub, const Args& a, std::ostream& out, std::ostream&) {
  check_out_file(a.out);
  const std::string dir = a.out_dir.empty() ? "." : a.out_dir;
  if (a.csv || !a.out_dir.empty()) ensure_writable_dir(dir);
  const auto m = resolve_model(sub, a);
  const SimConfig cfg = make_sim_config(sub, a);
  const NuVector nu = solve_nu(m.spec);
  const auto init = make_initial_condition(a, m.spec, nu);
  const PathEnsemble ens = simulate(m.spec, nu, init, cfg);
  json j = header("simulate", &m.spec, cfg.seed);
  j["model_source"] = m.source;
  j["config"] = sim_config_json(cfg);
  j["init"] = a.init;
  j["summary"] = ensemble_summary(ens);
  if (a.csv) write_paths_csv(ens, fs::path(dir) / "paths.csv");
  std::string path = a.out;
  if (path.empty() && !a.out_dir.empty()) path = (fs::path(dir) / "summary.json").string();
  emit(j, a, out, path);
  return kOk;
}

int cmd_test_qs(const CLI::App* sub, const Args& a, std::ostream& out, std::ostream& err) {
  check_out_file(a.out);
  const auto m = resolve_model(sub, a);
  const SimConfig cfg = make_sim_config(sub, a);
  const NuVector nu = solve_nu(m.spec);
  const auto law = std::make_shared<const QuasiStationaryLaw>(m.spec, nu);
  const PathEnsemble ens = simulate(m.spec, nu, InitialCondition::quasi_stationary(law), cfg);
  const TestReport r = test_quasi_stationarity(ens, m.spec, nu);
  print_failures(r, err);
  json j = with_header(header("test-qs", &m.spec, cfg.seed), to_json(r));
  j["model_source"] = m.source;
  j["config"] = sim_config_json(cfg);
  emit(j, a, out, a.out);
  return r.pass() ? kOk : kTestFailed;
}

int cmd_test_consistency(const CLI::App* sub, const Args& a, std::ostream& out, std::ostream& err) {
  check_out_file(a.out);
  const auto m = resolve_model(sub, a);
  const SimConfig cfg = make_sim_config(sub, a);
  const int K = m.spec.K;
  if (a.J < 1 || a.J >= K) throw ConfigError("test-consistency needs 1 <= J < K");
  const NuVector nu = solve_nu(m.spec);
  ConsistencyOptions opts;
  opts.swap_seeds = a.swap_seeds;
  if (a.zero_boundary) {
    NuVector zeroed = nu;
    for (std::size_t l = static_cast<std::size_t>(a.J) - 1; l < zeroed.values.size(); ++l) zeroed.values[l] = 0.0;
    opts.direct_nu = zeroed;
  }
  const TestReport r = test_consistency(m.spec, nu, a.J, K, cfg, opts);
  print_failures(r, err);
  json j = with_header(header("test-consistency", &m.spec, cfg.seed), to_json(r));
  j["model_source"] = m.source;
  j["config"] = sim_config_json(cfg);
  emit(j, a, out, a.out);
  return r.pass() ? kOk : kTestFailed;
}

int cmd_generator_check(const CLI::App* sub, const Args& a, std::ostream& out, std::ostream& err) {
  check_out_file(a.out);
  const auto m = resolve_model(sub, a);
  Args adj = a;
  if (adj.record.empty() && adj.record_every <= 0.0) adj.record_every = 0.02;
  const SimConfig cfg = make_sim_config(sub, adj);
  const NuVector nu = solve_nu(m.spec);

  std::vector<TestFunction> fs_list;
  if (a.functions.empty()) {
    fs_list.push_back(TestFunction::coordinate(0));
    if (m.spec.K > 1) fs_list.push_back(TestFunction::coordinate(1));
    fs_list.push_back(TestFunction::quadratic(0, 0));
  } else {
    for (const auto& s : a.functions) fs_list.push_back(TestFunction::parse(s));
  }
  for (const auto& f : fs_list)
    if (f.max_index() >= m.spec.K) throw ConfigError("test function " + f.name() + " needs more particles");

  json point_values = json::array();
  if (!a.points.empty()) {
    if (a.points.size() != static_cast<std::size_t>(m.spec.K))
      throw ConfigError("--point must list x_1, y_1, ..., y_{K-1}");
    for (const auto& f : fs_list) {
      const auto t = generator_terms(m.spec, nu, f, a.points);
      point_values.push_back({{"function", f.name()},
                              {"first_order", t.first_order},
                              {"second_order", t.second_order},
                              {"value", t.total()}});
    }
  }

  InitialCondition init = m.source.contains("preset") && m.source["preset"] == "free"
                              ? InitialCondition::fixed(std::vector<double>(static_cast<std::size_t>(m.spec.K), 0.0))
                              : make_initial_condition(a, m.spec, nu);
  const PathEnsemble ens = simulate(m.spec, nu, init, cfg);
  std::optional<PathEnsemble> half;
  if (!a.no_half_step) {
    SimConfig fine = cfg;
    fine.dt = cfg.dt / 2.0;
    fine.seed = mix_seed(cfg.seed, 0x68616c66);
    half = simulate(m.spec, nu, init, fine);
  }

  TestReport combined;
  combined.test_id = "generator_check";
  combined.tool_version = kToolVersion;
  combined.spec_hash = spec_hash(m.spec);
  for (const auto& f : fs_list) {
    const TestReport r = test_martingale_residual(m.spec, nu, f, ens, half ? &*half : nullptr);
    for (const auto& e : r.entries) combined.entries.push_back(e);
    for (const auto& [k, v] : r.sample_sizes) combined.sample_sizes[k] = v;
    for (const auto& [k, v] : r.seeds) combined.seeds[k] = v;
    combined.details[f.name()] = r.details;
  }
  if (!point_values.empty()) combined.details["point"] = {{"state", a.points}, {"values", point_values}};
  print_failures(combined, err);
  json j = with_header(header("generator-check", &m.spec, cfg.seed), to_json(combined));
  j["model_source"] = m.source;
  j["config"] = sim_config_json(cfg);
  emit(j, a, out, a.out);
  return combined.pass() ? kOk : kTestFailed;
}

int cmd_catalog_list(const Args& a, std::ostream& out) {
  json list = json::array();
  for (const auto& p : list_presets())
    list.push_back({{"name", p.name}, {"description", p.description}, {"defaults", p.defaults},
                    {"measure_defined", p.measure_defined}});
  json j = header("catalog list", nullptr, std::nullopt);
  j["presets"] = list;
  emit(j, a, out, a.out);
  return kOk;
}

int cmd_catalog_show(const CLI::App* sub, const Args& a, std::ostream& out) {
  const auto& info = preset_info(a.catalog_name);
  std::map<std::string, double> params;
  if (sub->count("--beta")) params["beta"] = a.beta;
  if (sub->count("--mu")) params["mu"] = a.mu;
  for (const auto& [key, value] : params)
    if (!info.defaults.count(key)) throw ConfigError("preset '" + info.name + "' has no parameter '" + key + "'");
  const json p = preset_json(a.catalog_name, params, a.K);
  json j = header("catalog show", nullptr, std::nullopt);
  j["preset"] = p;
  j["spec_hash"] = spec_hash(make_preset(a.catalog_name, params, a.K));
  emit(j, a, out, a.out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"qsbrown: quasi-stationary hierarchical Brownian particle systems"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "Check skew-symmetry and measure conditions");
  add_model_options(validate, a);
  add_output_options(validate, a);
  validate->add_option("--tol", a.tol, "Tolerance for the algebraic conditions");
  validate->add_flag("--skip-measure", a.skip_measure, "Only check the algebraic conditions");

  auto* nu = app.add_subcommand("nu", "Solve for the boundary constants nu");
  add_model_options(nu, a);
  add_output_options(nu, a);
  nu->add_option("--M", a.M, "Truncation size (default K+d-1)");

  auto* measure = app.add_subcommand("measure", "Moments and Fisher information of a spacing law");
  add_model_options(measure, a);
  add_output_options(measure, a);
  measure->add_option("--k", a.k, "Spacing index");
  measure->add_option("--points", a.points, "Evaluate density and CDF here")->delimiter(',');

  auto* sample = app.add_subcommand("sample", "Draw spacings and KS-test them against the CDF");
  add_model_options(sample, a);
  add_output_options(sample, a);
  sample->add_option("--k", a.k, "Spacing index");
  sample->add_option("--n", a.n, "Number of draws");
  sample->add_option("--seed", a.seed, "Seed");
  sample->add_option("--out-dir", a.out_dir, "Directory for samples.csv");
  sample->add_flag("--csv", a.csv, "Write the draws to samples.csv");

  auto* sim = app.add_subcommand("simulate", "Run an Euler-Maruyama ensemble");
  add_model_options(sim, a);
  add_sim_options(sim, a, 1000);
  add_output_options(sim, a);
  sim->add_option("--init", a.init, "qs, ladder or file:PATH");
  sim->add_option("--out-dir", a.out_dir, "Directory for summary.json and paths.csv");
  sim->add_flag("--csv", a.csv, "Write every recorded state to paths.csv");

  auto* test_qs = app.add_subcommand("test-qs", "Quasi-stationarity test");
  add_model_options(test_qs, a);
  add_sim_options(test_qs, a, 10000);
  add_output_options(test_qs, a);

  auto* test_cons = app.add_subcommand("test-consistency", "Projection consistency test (J of K particles)");
  add_model_options(test_cons, a);
  add_sim_options(test_cons, a, 10000);
  add_output_options(test_cons, a);
  test_cons->add_option("--J", a.J, "Number of particles in the direct run");
  test_cons->add_flag("--zero-boundary", a.zero_boundary, "Drop the nu boundary terms from the direct run");
  test_cons->add_flag("--swap-seeds", a.swap_seeds, "Exchange the seeds of the two runs");

  auto* gen = app.add_subcommand("generator-check", "Martingale residual test of the generator");
  add_model_options(gen, a);
  add_sim_options(gen, a, 10000);
  add_output_options(gen, a);
  gen->add_option("--f", a.functions, "Test function: x_1, y_k, x_1^2, x_1*y_k (repeatable)");
  gen->add_option("--point", a.points, "Also evaluate L f at x_1,y_1,...,y_{K-1}")->delimiter(',');
  gen->add_option("--init", a.init, "qs, ladder or file:PATH");
  gen->add_flag("--no-half-step", a.no_half_step, "Skip the dt/2 run for the discretization allowance");

  auto* catalog = app.add_subcommand("catalog", "Preset catalog");
  catalog->require_subcommand(1);
  auto* list = catalog->add_subcommand("list", "List presets");
  add_output_options(list, a);
  auto* show = catalog->add_subcommand("show", "Show a preset");
  show->add_option("name", a.catalog_name, "Preset name")->required();
  show->add_option("--beta", a.beta, "beta");
  show->add_option("--mu", a.mu, "mu");
  show->add_option("--K", a.K, "Number of particles");
  add_output_options(show, a);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (app.got_subcommand(catalog)) {
      if (catalog->got_subcommand(list)) return cmd_catalog_list(a, out);
      return cmd_catalog_show(show, a, out);
    }
    CLI::App* sub = app.get_subcommands().front();
    apply_config(sub, a);
    if (sub == validate) return cmd_validate(sub, a, out, err);
    if (sub == nu) return cmd_nu(sub, a, out, err);
    if (sub == measure) return cmd_measure(sub, a, out, err);
    if (sub == sample) return cmd_sample(sub, a, out, err);
    if (sub == sim) return cmd_simulate(sub, a, out, err);
    if (sub == test_qs) return cmd_test_qs(sub, a, out, err);
    if (sub == test_cons) return cmd_test_consistency(sub, a, out, err);
    if (sub == gen) return cmd_generator_check(sub, a, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericFailure;
  }
  return kConfigError;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace qsb::cli
