#include "qsbrown/sde.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "qsbrown/errors.hpp"
#include "qsbrown/random.hpp"

namespace qsb {

void SimConfig::check() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (dt > horizon) throw ConfigError("dt must not exceed the horizon");
  if (n_paths == 0) throw ConfigError("n_paths must be positive");
  if (!(floor_eps >= 0.0)) throw ConfigError("floor_eps must be non-negative");
  if (max_halvings < 0) throw ConfigError("max_halvings must be non-negative");
  for (double t : record_times)
    if (t < 0.0 || t > horizon * (1.0 + 1e-12))
      throw ConfigError("record times must lie in [0, horizon]");
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(horizon / dt)));
}

std::vector<std::size_t> SimConfig::record_steps() const {
  const std::size_t n = steps();
  std::vector<std::size_t> out;
  if (record_times.empty()) {
    out = {0, n};
  } else {
    for (double t : record_times)
      out.push_back(std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(t / dt))));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

InitialCondition InitialCondition::quasi_stationary(std::shared_ptr<const QuasiStationaryLaw> law) {
  InitialCondition ic;
  ic.kind_ = Kind::QuasiStationary;
  ic.law_ = std::move(law);
  return ic;
}

InitialCondition InitialCondition::fixed(std::vector<double> x) {
  InitialCondition ic;
  ic.kind_ = Kind::Fixed;
  ic.fixed_ = std::move(x);
  return ic;
}

InitialCondition InitialCondition::per_path(Eigen::MatrixXd rows) {
  if (rows.rows() == 0) throw ConfigError("initial positions table is empty");
  InitialCondition ic;
  ic.kind_ = Kind::PerPath;
  ic.rows_ = std::move(rows);
  return ic;
}

int InitialCondition::K() const {
  switch (kind_) {
    case Kind::QuasiStationary: return law_->K();
    case Kind::Fixed: return static_cast<int>(fixed_.size());
    case Kind::PerPath: return static_cast<int>(rows_.cols());
  }
  return 0;
}

std::vector<double> InitialCondition::draw(std::uint64_t path, std::uint64_t seed) const {
  switch (kind_) {
    case Kind::QuasiStationary: {
      RandomStream rng(seed, path, StreamPurpose::InitialCondition);
      return law_->sample(rng);
    }
    case Kind::Fixed: return fixed_;
    case Kind::PerPath: {
      const auto r = rows_.rows() == 1 ? 0 : static_cast<Eigen::Index>(path);
      if (r >= rows_.rows()) throw ConfigError("initial positions table has fewer rows than paths");
      std::vector<double> x(static_cast<std::size_t>(rows_.cols()));
      for (Eigen::Index k = 0; k < rows_.cols(); ++k) x[static_cast<std::size_t>(k)] = rows_(r, k);
      return x;
    }
  }
  return {};
}

DriftField::DriftField(const ModelSpec& spec, const NuVector& nu)
    : K_(spec.K), d_(spec.d), potential_(spec.potential) {
  spec.check_structure();
  if (nu.size() < spec.K + spec.d - 1) throw ConfigError("nu must cover indices 1..K+d-1");
  const auto K = static_cast<std::size_t>(K_);
  const auto d = static_cast<std::size_t>(d_);
  mu_.resize(K);
  band_.assign(K * d, 0.0);
  boundary_.assign(K, 0.0);
  for (int k = 1; k <= K_; ++k) {
    mu_[static_cast<std::size_t>(k - 1)] = spec.mu(k);
    for (int j = 0; j < d_; ++j) {
      const int l = k + j;
      if (l <= K_ - 1) band_[static_cast<std::size_t>(k - 1) * d + static_cast<std::size_t>(j)] = spec.r(l, k);
    }
    double b = 0.0;
    for (int l = std::max(K_, k); l <= k + d_ - 1; ++l) b += nu(l) * spec.r(l, k);
    boundary_[static_cast<std::size_t>(k - 1)] = b;
  }
}

void DriftField::evaluate_unchecked(std::span<const double> x, std::span<double> out,
                                    std::span<double> du) const {
  const auto K = static_cast<std::size_t>(K_);
  const auto d = static_cast<std::size_t>(d_);
  for (std::size_t l = 0; l + 1 < K; ++l) du[l] = potential_.derivative(x[l] - x[l + 1]);
  for (std::size_t k = 0; k < K; ++k) {
    double b = mu_[k] + boundary_[k];
    const double* row = band_.data() + k * d;
    for (std::size_t j = 0; j < d && k + j + 1 < K; ++j) b += du[k + j] * row[j];
    out[k] = b;
  }
}

void DriftField::evaluate(std::span<const double> x, std::span<double> out) const {
  if (x.size() != static_cast<std::size_t>(K_) || out.size() != x.size())
    throw ConfigError("drift: state length must equal K");
  for (std::size_t l = 0; l + 1 < x.size(); ++l) {
    const double y = x[l] - x[l + 1];
    if (!potential_.in_support(y)) throw SupportViolation(static_cast<int>(l + 1), y);
  }
  std::vector<double> du(x.size() > 0 ? x.size() - 1 : 0);
  evaluate_unchecked(x, out, du);
}

std::vector<double> drift(const ModelSpec& spec, const NuVector& nu, std::span<const double> x) {
  DriftField field(spec, nu);
  std::vector<double> out(x.size());
  field.evaluate(x, out);
  return out;
}

std::vector<double> PathEnsemble::position(std::size_t time_index, int k) const {
  const auto& m = positions.at(time_index);
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, k - 1);
  return out;
}

std::vector<double> PathEnsemble::spacing(std::size_t time_index, int k) const {
  const auto& m = positions.at(time_index);
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, k - 1) - m(i, k);
  return out;
}

std::vector<double> PathEnsemble::state(std::size_t time_index, std::size_t i) const {
  const auto& m = positions.at(time_index);
  const auto row = static_cast<Eigen::Index>(i);
  std::vector<double> s(static_cast<std::size_t>(K));
  s[0] = m(row, 0);
  for (int k = 1; k < K; ++k) s[static_cast<std::size_t>(k)] = m(row, k - 1) - m(row, k);
  return s;
}

namespace {

/// Per-path integrator state; one instance per worker thread.
class Stepper {
 public:
  Stepper(const DriftField& field, const Eigen::MatrixXd& chol, bool diagonal, const SimConfig& cfg)
      : field_(field),
        chol_(chol),
        diagonal_(diagonal),
        cfg_(cfg),
        half_line_(field.potential().support() == Support::PositiveHalfLine),
        K_(static_cast<std::size_t>(field.K())),
        drift_(K_),
        du_(K_),
        proposal_(K_) {}

  bool valid(std::span<const double> x) const {
    for (std::size_t k = 0; k < K_; ++k)
      if (!std::isfinite(x[k])) return false;
    for (std::size_t l = 0; l + 1 < K_; ++l) {
      const double y = x[l] - x[l + 1];
      if (!field_.potential().in_support(y)) return false;
      if (half_line_ && y < cfg_.floor_eps) return false;
    }
    return true;
  }

  /// Advances x over a step of length h driven by the uncorrelated
  /// Brownian increment dw. Returns false once max_halvings is exceeded.
  bool advance(std::vector<double>& x, double h, std::span<const double> dw, int depth,
               RandomStream& rng, std::uint64_t& halvings) {
    field_.evaluate_unchecked(x, drift_, du_);
    for (std::size_t k = 0; k < K_; ++k) {
      double noise;
      if (diagonal_) {
        noise = chol_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) * dw[k];
      } else {
        noise = 0.0;
        for (std::size_t j = 0; j <= k; ++j)
          noise += chol_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) * dw[j];
      }
      proposal_[k] = x[k] + drift_[k] * h + noise;
    }
    if (valid(proposal_)) {
      x.swap(proposal_);
      return true;
    }
    if (depth >= cfg_.max_halvings) return false;
    ++halvings;
    // Brownian bridge split keeps the already drawn increment.
    std::vector<double> first(K_);
    std::vector<double> second(K_);
    const double spread = std::sqrt(h / 4.0);
    for (std::size_t k = 0; k < K_; ++k) {
      first[k] = 0.5 * dw[k] + spread * rng.normal();
      second[k] = dw[k] - first[k];
    }
    return advance(x, 0.5 * h, first, depth + 1, rng, halvings) &&
           advance(x, 0.5 * h, second, depth + 1, rng, halvings);
  }

 private:
  const DriftField& field_;
  const Eigen::MatrixXd& chol_;
  bool diagonal_;
  const SimConfig& cfg_;
  bool half_line_;
  std::size_t K_;
  std::vector<double> drift_;
  std::vector<double> du_;
  std::vector<double> proposal_;
};

}  // namespace

PathEnsemble simulate(const ModelSpec& spec, const NuVector& nu, const InitialCondition& init,
                      const SimConfig& cfg) {
  cfg.check();
  spec.check_structure();
  if (init.K() != spec.K) throw ConfigError("initial condition has the wrong number of particles");
  const DriftField field(spec, nu);
  const CholeskyFactor chol = cholesky(spec);
  const bool diagonal = chol.is_diagonal();

  const std::size_t n_steps = cfg.steps();
  const auto rec_steps = cfg.record_steps();
  const std::size_t n_paths = cfg.n_paths;
  const auto K = static_cast<std::size_t>(spec.K);

  std::vector<Eigen::MatrixXd> buffers(rec_steps.size(),
                                       Eigen::MatrixXd(static_cast<Eigen::Index>(n_paths), spec.K));
  std::vector<char> failed(n_paths, 0);
  std::vector<double> failed_at(n_paths, 0.0);
  std::vector<std::uint64_t> halvings_per_path(n_paths, 0);

  unsigned n_threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_paths));

  std::exception_ptr error;
  std::mutex error_mutex;
  const double sqrt_dt = std::sqrt(cfg.dt);

  auto worker = [&](std::size_t begin, std::size_t end) {
    try {
      Stepper stepper(field, chol.lower, diagonal, cfg);
      std::vector<double> dw(K);
      for (std::size_t p = begin; p < end; ++p) {
        std::vector<double> x = init.draw(p, cfg.seed);
        if (x.size() != K) throw ConfigError("initial condition has the wrong number of particles");
        for (std::size_t l = 0; l + 1 < K; ++l) {
          const double y = x[l] - x[l + 1];
          if (!spec.potential.in_support(y)) throw SupportViolation(static_cast<int>(l + 1), y);
        }
        RandomStream rng(cfg.seed, p, StreamPurpose::Noise);
        std::size_t next_rec = 0;
        auto record = [&](std::size_t step) {
          while (next_rec < rec_steps.size() && rec_steps[next_rec] == step) {
            for (std::size_t k = 0; k < K; ++k)
              buffers[next_rec](static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = x[k];
            ++next_rec;
          }
        };
        record(0);
        std::uint64_t halvings = 0;
        for (std::size_t n = 1; n <= n_steps; ++n) {
          for (std::size_t k = 0; k < K; ++k) dw[k] = sqrt_dt * rng.normal();
          if (!stepper.advance(x, cfg.dt, dw, 0, rng, halvings)) {
            failed[p] = 1;
            failed_at[p] = static_cast<double>(n) * cfg.dt;
            break;
          }
          record(n);
        }
        halvings_per_path[p] = halvings;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  if (n_threads <= 1) {
    worker(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_paths + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(n_paths, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  PathEnsemble ens;
  ens.K = spec.K;
  ens.config = cfg;
  ens.spec_hash = spec_hash(spec);
  ens.record_steps = rec_steps;
  for (auto s : rec_steps) ens.times.push_back(static_cast<double>(s) * cfg.dt);
  for (std::size_t p = 0; p < n_paths; ++p) {
    ens.halvings += halvings_per_path[p];
    if (failed[p]) ens.failures.push_back({p, failed_at[p]});
    else ens.path_ids.push_back(p);
  }
  if (ens.failures.size() * 1000 > n_paths)
    throw FailureRateExceeded(ens.failures.size(), n_paths);

  if (ens.failures.empty()) {
    ens.positions = std::move(buffers);
  } else {
    const auto kept = static_cast<Eigen::Index>(ens.path_ids.size());
    for (auto& buf : buffers) {
      Eigen::MatrixXd compact(kept, spec.K);
      for (Eigen::Index i = 0; i < kept; ++i)
        compact.row(i) = buf.row(static_cast<Eigen::Index>(ens.path_ids[static_cast<std::size_t>(i)]));
      ens.positions.push_back(std::move(compact));
    }
  }
  return ens;
}

}  // namespace qsb
