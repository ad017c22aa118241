#pragma once

#include <cstddef>
#include <functional>

namespace qsb {

using Integrand = std::function<double(double)>;

struct QuadResult {
  double value = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

/// Adaptive Simpson with Richardson correction on [a, b].
/// `converged` is false when the depth limit was hit somewhere or the
/// integrand produced a non-finite value.
QuadResult adaptive_simpson(const Integrand& f, double a, double b, double abs_tol,
                            int max_depth = 48);

/// Integral over (0, b] on the dyadic mesh b/2^{j+1} < z <= b/2^j, for
/// integrands that may be singular at 0. Pieces are summed until the
/// geometric extrapolation of the remaining mass is below
/// rel_tol * |partial sum|. Not converged when the pieces stop shrinking
/// (power-law exponent <= -1) or `max_levels` is exhausted.
QuadResult integrate_graded(const Integrand& f, double b, double rel_tol, int max_levels = 1000);

}  // namespace qsb
