#include "qsbrown/quadrature.hpp"

#include <cmath>

namespace qsb {

namespace {

constexpr std::size_t kMaxEvaluations = 1u << 22;

struct SimpsonState {
  const Integrand& f;
  std::size_t evaluations = 0;
  bool converged = true;

  double eval(double x) {
    ++evaluations;
    const double v = f(x);
    if (!std::isfinite(v)) converged = false;
    return v;
  }

  double recurse(double a, double fa, double m, double fm, double b, double fb, double whole,
                 double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (!std::isfinite(delta)) {
      converged = false;
      return left + right;
    }
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    // Differences at rounding level cannot be refined away.
    if (std::abs(delta) <= 1e-14 * (std::abs(left) + std::abs(right))) return left + right;
    if (depth <= 0 || m - a <= 0.0 || lm <= a || rm >= b || evaluations > kMaxEvaluations) {
      converged = false;
      return left + right + delta / 15.0;
    }
    return recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           recurse(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
  }
};

}  // namespace

QuadResult adaptive_simpson(const Integrand& f, double a, double b, double abs_tol, int max_depth) {
  SimpsonState s{f};
  if (a == b) return {0.0, true, 0};
  const double m = 0.5 * (a + b);
  const double fa = s.eval(a);
  const double fm = s.eval(m);
  const double fb = s.eval(b);
  // One forced split avoids accepting a coarse estimate whose two halves
  // happen to agree by symmetry.
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = s.eval(lm);
  const double frm = s.eval(rm);
  const double left_whole = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right_whole = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double value = s.recurse(a, fa, lm, flm, m, fm, left_whole, 0.5 * abs_tol, max_depth) +
                       s.recurse(m, fm, rm, frm, b, fb, right_whole, 0.5 * abs_tol, max_depth);
  return {value, s.converged && std::isfinite(value), s.evaluations};
}

QuadResult integrate_graded(const Integrand& f, double b, double rel_tol, int max_levels) {
  QuadResult out;
  double prev = 0.0;
  int stalled = 0;
  double hi = b;
  for (int level = 0; level < max_levels; ++level) {
    const double lo = 0.5 * hi;
    const double piece_tol = std::max(rel_tol * std::abs(out.value), 1e-300) * 0.01;
    const auto piece = adaptive_simpson(f, lo, hi, piece_tol, 30);
    out.evaluations += piece.evaluations;
    if (!std::isfinite(piece.value)) {
      out.converged = false;
      return out;
    }
    out.value += piece.value;
    const double mag = std::abs(piece.value);
    if (level > 0) {
      if (mag == 0.0 && prev == 0.0) return out;
      const double ratio = prev > 0.0 ? mag / prev : 2.0;
      stalled = ratio >= 1.0 - 1e-6 ? stalled + 1 : 0;
      if (stalled >= 20) {
        out.converged = false;
        return out;
      }
      if (ratio < 1.0) {
        const double tail = mag * ratio / (1.0 - ratio);
        if (tail <= rel_tol * std::abs(out.value)) {
          out.value += piece.value * ratio / (1.0 - ratio);
          return out;
        }
      }
    }
    prev = mag;
    hi = lo;
    if (hi < 1e-300) break;
  }
  out.converged = false;
  return out;
}

}  // namespace qsb
