#pragma once

// Independent numeric oracles for the test suite.  Everything here is
// deliberately decoupled from the library's own numerics: integration uses
// tanh-sinh (the library uses Gauss-Kronrod), semi-infinite ranges use an
// explicit rational substitution, and integrands are written from raw
// definitions rather than model methods.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <vector>

namespace oracle {

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-12) {
  boost::math::quadrature::tanh_sinh<double> integ;
  return integ.integrate(f, a, b, tol);
}

// ∫_a^∞ f via x = a + v/(1−v), v in [0,1).
template <class F>
double integrate_tail(F&& f, double a, double tol = 1e-12) {
  return integrate(
      [&](double v) {
        double om = 1.0 - v;
        return f(a + v / om) / (om * om);
      },
      0.0, 1.0, tol);
}

// Right tail of X = V − T: ∫₀^∞ rate·e^{−rate·t}(1+x+t)^{−iota} dt, x ≥ −1.
inline double mg1_sf(double x, double iota, double rate) {
  return integrate_tail(
      [&](double t) {
        return rate * std::exp(-rate * t) * std::pow(1.0 + x + t, -iota);
      },
      0.0);
}

inline double chi_square_pvalue(double stat, int dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Two-sided KS statistic of sorted samples against a CDF.
template <class Cdf>
double ks_statistic(const std::vector<double>& sorted, Cdf&& cdf) {
  double d = 0.0;
  const double n = static_cast<double>(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    double c = cdf(sorted[i]);
    d = std::max(d, std::abs(c - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
  }
  return d;
}

}  // namespace oracle
