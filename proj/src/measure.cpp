#include "qsbrown/measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include "qsbrown/errors.hpp"
#include "qsbrown/quadrature.hpp"

namespace qsb {

namespace {

constexpr double kChunkThreshold = 1e-13;  // tail chunk mass relative to running total
constexpr double kMaxHalfWidth = 0x1p60;
constexpr int kDyadicLevels = 30;          // dyadic mesh panels toward 0 on the half-line
constexpr int kCellsPerPanel = 256;
constexpr int kCellsPerDyadicPanel = 16;
constexpr std::size_t kBaseQuantiles = 4096;
constexpr double kCdfTolerance = 1e-6;
constexpr std::size_t kGuideSize = 4096;

double golden_max(const Integrand& f, double a, double b) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < 200 && b - a > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double safe(double v) { return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v; }

double find_mode(const Integrand& log_kernel, Support support) {
  std::vector<double> candidates;
  if (support == Support::FullLine) {
    for (int j = 40; j >= -10; --j) candidates.push_back(-std::ldexp(1.0, j));
    candidates.push_back(0.0);
  }
  for (int j = support == Support::FullLine ? -10 : -30; j <= 40; ++j)
    candidates.push_back(std::ldexp(1.0, j));

  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = safe(log_kernel(candidates[i]));
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  if (!std::isfinite(best_value)) return candidates[best];
  const double lo = candidates[best == 0 ? 0 : best - 1];
  const double hi = candidates[std::min(best + 1, candidates.size() - 1)];
  if (lo == hi) return candidates[best];
  const double refined = golden_max([&](double z) { return safe(log_kernel(z)); }, lo, hi);
  return safe(log_kernel(refined)) >= best_value ? refined : candidates[best];
}

struct Tracked {
  const char* which;
  Integrand f;
};

}  // namespace

double SpacingMeasure::log_kernel(double z) const {
  if (!potential_.in_support(z)) return -std::numeric_limits<double>::infinity();
  return 2.0 * potential_.value(z) - 2.0 * nu_ * z;
}

double SpacingMeasure::scaled_kernel(double z) const {
  const double lk = log_kernel(z);
  if (lk == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::exp(lk - log_peak_);
}

double SpacingMeasure::density(double z) const { return scaled_kernel(z) / scaled_mass_; }

double SpacingMeasure::mesh_integral(std::size_t cell, double z) const {
  const auto kernel = [this](double x) { return scaled_kernel(x); };
  if (cell == 0 && graded_first_cell_) return integrate_graded(kernel, z, 1e-14).value;
  return adaptive_simpson(kernel, mesh_z_[cell], z, 1e-15 * mesh_total_).value;
}

double SpacingMeasure::cdf(double z) const {
  if (z <= mesh_z_.front()) return 0.0;
  if (z >= mesh_z_.back()) return 1.0;
  const auto it = std::upper_bound(mesh_z_.begin(), mesh_z_.end(), z);
  const auto cell = static_cast<std::size_t>(it - mesh_z_.begin()) - 1;
  const double v = mesh_cdf_[cell] + mesh_integral(cell, z) / mesh_total_;
  return std::clamp(v, 0.0, 1.0);
}

double SpacingMeasure::invert(double u) const {
  if (u <= 0.0) return mesh_z_.front();
  if (u >= 1.0) return mesh_z_.back();
  const auto it = std::upper_bound(mesh_cdf_.begin(), mesh_cdf_.end(), u);
  std::size_t cell = static_cast<std::size_t>(it - mesh_cdf_.begin());
  cell = cell == 0 ? 0 : cell - 1;
  cell = std::min(cell, mesh_z_.size() - 2);
  double lo = mesh_z_[cell];
  double hi = mesh_z_[cell + 1];
  const double f_lo = mesh_cdf_[cell];
  const double f_hi = mesh_cdf_[cell + 1];
  if (f_hi <= f_lo) return lo;
  const double target = (u - f_lo) * mesh_total_;
  double z = lo + (hi - lo) * (u - f_lo) / (f_hi - f_lo);
  for (int iter = 0; iter < 100; ++iter) {
    const double g = mesh_integral(cell, z) - target;
    if (std::abs(g) <= 1e-14 * mesh_total_) break;
    if (g < 0.0) lo = z;
    else hi = z;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z))) break;
    const double slope = scaled_kernel(z);
    const double newton = slope > 0.0 ? z - g / slope : lo - 1.0;
    z = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
  }
  return z;
}

void SpacingMeasure::build_quantiles() {
  quantile_u_.clear();
  quantile_z_.clear();
  quantile_u_.push_back(0.0);
  quantile_z_.push_back(mesh_z_.front());

  auto refine = [this](auto&& self, double u0, double z0, double u1, double z1, int depth) -> void {
    const double zm = 0.5 * (z0 + z1);
    const double um = 0.5 * (u0 + u1);
    if (depth < 40 && z1 > z0 && std::abs(cdf(zm) - um) > kCdfTolerance) {
      const double zsplit = invert(um);
      if (zsplit > z0 && zsplit < z1) {
        self(self, u0, z0, um, zsplit, depth + 1);
        self(self, um, zsplit, u1, z1, depth + 1);
        return;
      }
    }
    if (z1 > quantile_z_.back() || u1 == 1.0) {
      quantile_u_.push_back(u1);
      quantile_z_.push_back(std::max(z1, std::nextafter(quantile_z_.back(), HUGE_VAL)));
    }
  };

  double prev_u = 0.0;
  double prev_z = mesh_z_.front();
  for (std::size_t i = 1; i <= kBaseQuantiles; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(kBaseQuantiles);
    const double z = i == kBaseQuantiles ? mesh_z_.back() : invert(u);
    refine(refine, prev_u, prev_z, u, z, 0);
    prev_u = u;
    prev_z = z;
  }

  guide_.assign(kGuideSize, 0);
  std::size_t i = 0;
  for (std::size_t j = 0; j < kGuideSize; ++j) {
    const double u = static_cast<double>(j) / static_cast<double>(kGuideSize);
    while (i + 2 < quantile_u_.size() && quantile_u_[i + 1] <= u) ++i;
    guide_[j] = static_cast<std::uint32_t>(i);
  }
}

double SpacingMeasure::quantile(double u) const {
  if (u <= 0.0) return quantile_z_.front();
  if (u >= 1.0) return quantile_z_.back();
  std::size_t j = static_cast<std::size_t>(u * static_cast<double>(kGuideSize));
  j = std::min(j, kGuideSize - 1);
  std::size_t i = guide_[j];
  while (i + 2 < quantile_u_.size() && quantile_u_[i + 1] <= u) ++i;
  const double t = (u - quantile_u_[i]) / (quantile_u_[i + 1] - quantile_u_[i]);
  return quantile_z_[i] + t * (quantile_z_[i + 1] - quantile_z_[i]);
}

SpacingMeasure build_measure(const Potential& potential, double nu_k, int index) {
  SpacingMeasure m(potential);
  m.index_ = index;
  m.nu_ = nu_k;
  const bool half_line = potential.support() == Support::PositiveHalfLine;

  const Integrand log_kernel = [&m](double z) { return m.log_kernel(z); };
  const double mode = find_mode(log_kernel, potential.support());
  m.log_peak_ = log_kernel(mode);
  if (!std::isfinite(m.log_peak_))
    throw DivergentIntegral(index, "Z", "density kernel is not finite near its mode");

  const double peak = m.log_peak_;
  // Weighted kernels share exp(log_kernel - peak); the U' factor enters in
  // log space so that large |U'| near singular endpoints cannot overflow.
  const auto weighted = [&m, peak](double z, double log_weight) {
    const double lk = m.log_kernel(z);
    if (lk == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::exp(lk - peak + log_weight);
  };
  const Integrand w0 = [&](double z) { return weighted(z, 0.0); };
  const Integrand w1 = [&](double z) { return (z - mode) * weighted(z, 0.0); };
  const Integrand w2 = [&](double z) {
    const double dz = std::abs(z - mode);
    return dz == 0.0 ? 0.0 : weighted(z, 2.0 * std::log(dz));
  };
  const Integrand w_score = [&](double z) {
    const double s = std::abs(2.0 * potential.derivative(z) - 2.0 * nu_k);
    return s == 0.0 ? 0.0 : weighted(z, 2.0 * std::log(s));
  };
  const Integrand w_du2 = [&](double z) {
    const double s = std::abs(potential.derivative(z));
    return s == 0.0 ? 0.0 : weighted(z, 2.0 * std::log(s));
  };
  const Integrand w_du = [&](double z) {
    const double s = potential.derivative(z);
    if (s == 0.0) return 0.0;
    return std::copysign(weighted(z, std::log(std::abs(s))), s);
  };

  const std::array<Tracked, 3> tracked{
      {{"Z", w0}, {"second_moment", w2}, {"fisher", w_du2}}};

  // Central region and the half-line split point.
  double left_edge = mode - 1.0;
  double split = 0.0;
  if (half_line) {
    split = mode <= 2.0 ? 0.5 * mode : mode - 1.0;
    left_edge = split;
  }
  const double right_start = mode + 1.0;

  std::array<double, 3> totals{};
  for (std::size_t i = 0; i < tracked.size(); ++i) {
    const auto core = adaptive_simpson(tracked[i].f, left_edge, right_start, 1e-14);
    if (!core.converged) throw DivergentIntegral(index, tracked[i].which, "no convergence near mode");
    totals[i] = core.value;
    if (half_line) {
      const auto g = integrate_graded(tracked[i].f, split, 1e-13);
      if (!g.converged)
        throw NonIntegrableSingularity(index, tracked[i].which, "integrand not integrable at 0");
      totals[i] += g.value;
    }
  }

  auto expand = [&](double start, double direction) {
    std::vector<double> breaks{start};
    double x = start;
    double width = 1.0;
    for (;;) {
      const double next = x + direction * width;
      const char* failing = nullptr;
      for (std::size_t i = 0; i < tracked.size(); ++i) {
        const double tol = 1e-4 * kChunkThreshold * totals[i] + 1e-300;
        const double a = std::min(x, next);
        const double b = std::max(x, next);
        const auto chunk = adaptive_simpson(tracked[i].f, a, b, tol, 40);
        if (!std::isfinite(chunk.value))
          throw DivergentIntegral(index, tracked[i].which, "non-finite tail integrand");
        totals[i] += chunk.value;
        if (chunk.value > kChunkThreshold * totals[i] && failing == nullptr) failing = tracked[i].which;
      }
      x = next;
      breaks.push_back(x);
      if (failing == nullptr) break;
      width *= 2.0;
      if (std::abs(x - mode) > kMaxHalfWidth)
        throw DivergentIntegral(index, failing, "tail expansion exceeded 2^60 without mass vanishing");
    }
    return breaks;
  };

  std::vector<double> right = expand(right_start, 1.0);
  std::vector<double> breaks;
  if (half_line) {
    breaks.push_back(split);
    breaks.push_back(mode);
  } else {
    std::vector<double> left = expand(left_edge, -1.0);
    breaks.assign(left.rbegin(), left.rend());
    breaks.push_back(mode);
  }
  breaks.insert(breaks.end(), right.begin(), right.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // Final quadrature over the window.
  const std::size_t n_panels = breaks.size() - 1;
  const double panel_tol = 1e-12 * totals[0] / static_cast<double>(n_panels);
  auto integrate_window = [&](const Integrand& f, const char* which, double scale) {
    double sum = 0.0;
    for (std::size_t p = 0; p < n_panels; ++p) {
      const auto r = adaptive_simpson(f, breaks[p], breaks[p + 1], panel_tol * scale);
      if (!std::isfinite(r.value)) throw DivergentIntegral(index, which, "non-finite integral");
      sum += r.value;
    }
    if (half_line) {
      const auto g = integrate_graded(f, breaks.front(), 1e-13);
      if (!g.converged)
        throw NonIntegrableSingularity(index, which, "integrand not integrable at 0");
      sum += g.value;
    }
    return sum;
  };
  const double i0 = integrate_window(w0, "Z", 1.0);
  if (!(i0 > 0.0) || !std::isfinite(i0)) throw DivergentIntegral(index, "Z", "zero or infinite mass");
  const double i1 = integrate_window(w1, "second_moment", 1.0);
  const double i2 = integrate_window(w2, "second_moment", 1.0);
  const double i_score = integrate_window(w_score, "fisher", 1.0);
  const double i_du2 = integrate_window(w_du2, "fisher", 1.0);
  const double i_du = integrate_window(w_du, "fisher", 1.0);

  m.scaled_mass_ = i0;
  m.partition_ = std::exp(peak) * i0;
  if (!std::isfinite(m.partition_)) throw DivergentIntegral(index, "Z", "partition overflow");
  const double shift = i1 / i0;
  m.mean_ = mode + shift;
  m.variance_ = std::max(0.0, i2 / i0 - shift * shift);
  m.fisher_ = i_score / i0;
  m.fisher_alt_ = 4.0 * (i_du2 - 2.0 * nu_k * i_du + nu_k * nu_k * i0) / i0;

  // CDF mesh.
  std::vector<double>& mz = m.mesh_z_;
  if (half_line) {
    mz.push_back(0.0);
    const double first = breaks.front();
    double prev = std::ldexp(first, -kDyadicLevels);
    mz.push_back(prev);
    for (int j = kDyadicLevels - 1; j >= 0; --j) {
      const double next = std::ldexp(first, -j);
      for (int c = 1; c <= kCellsPerDyadicPanel; ++c)
        mz.push_back(prev + (next - prev) * c / kCellsPerDyadicPanel);
      prev = next;
    }
    m.graded_first_cell_ = true;
  } else {
    mz.push_back(breaks.front());
  }
  for (std::size_t p = 0; p < n_panels; ++p) {
    for (int c = 1; c <= kCellsPerPanel; ++c)
      mz.push_back(breaks[p] + (breaks[p + 1] - breaks[p]) * c / kCellsPerPanel);
    mz.back() = breaks[p + 1];
  }
  mz.erase(std::unique(mz.begin(), mz.end()), mz.end());

  m.mesh_total_ = i0;  // provisional tolerance scale for mesh_integral
  std::vector<double>& cdf = m.mesh_cdf_;
  cdf.assign(mz.size(), 0.0);
  double running = 0.0;
  for (std::size_t c = 0; c + 1 < mz.size(); ++c) {
    running += m.mesh_integral(c, mz[c + 1]);
    cdf[c + 1] = running;
  }
  m.mesh_total_ = running;
  m.table_mass_ = running / i0;
  for (double& v : cdf) v /= running;
  cdf.back() = 1.0;

  m.build_quantiles();
  return m;
}

double sample_spacing(const SpacingMeasure& measure, RandomStream& rng) {
  return measure.quantile(rng.uniform());
}

QuasiStationaryLaw::QuasiStationaryLaw(const ModelSpec& spec, const NuVector& nu) : K_(spec.K) {
  if (nu.size() < spec.K - 1) throw ConfigError("nu must cover spacing indices 1..K-1");
  std::map<double, std::shared_ptr<const SpacingMeasure>> cache;
  for (int k = 1; k < spec.K; ++k) {
    const double nu_k = nu(k);
    auto it = cache.find(nu_k);
    if (it == cache.end())
      it = cache.emplace(nu_k, std::make_shared<const SpacingMeasure>(
                                   build_measure(spec.potential, nu_k, k)))
               .first;
    measures_.push_back(it->second);
  }
}

std::vector<double> QuasiStationaryLaw::sample(RandomStream& rng) const {
  std::vector<double> x(static_cast<std::size_t>(K_), 0.0);
  for (int k = 1; k < K_; ++k)
    x[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k - 1)] - sample_spacing(measure(k), rng);
  return x;
}

std::vector<double> sample_initial_condition(const QuasiStationaryLaw& law, RandomStream& rng) {
  return law.sample(rng);
}

}  // namespace qsb
