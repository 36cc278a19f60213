#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>

#include "ruinmc/errors.hpp"

namespace ruinmc {

// Adaptive Gauss-Kronrod over [a, b]; either endpoint may be infinite.
// Raises quadrature_error with the achieved error estimate on non-convergence.
// abs_tol admits integrals whose value is negligible on some external scale
// (piecewise verification integrals), where a relative criterion is vacuous.
template <class F>
double integrate_gk(F&& f, double a, double b, double rel_tol,
                    const char* what, double abs_tol = 0.0) {
  if (a == b) return 0.0;
  double err = 0.0, l1 = 0.0;
  double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 15, rel_tol, &err, &l1);
  double scale = std::max(std::abs(val), l1 * 1e-3) + 1e-300;
  if (!(err <= 100.0 * rel_tol * scale + abs_tol + 1e-305)) {
    throw quadrature_error(std::string("quadrature did not converge for ") +
                           what + ": achieved error estimate " +
                           std::to_string(err) + " on value " +
                           std::to_string(val));
  }
  return val;
}

}  // namespace ruinmc
