#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ruinmc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// log(1e-300): interval masses below this (log-space) are degenerate.
inline constexpr double kLogMassFloor = -690.77552789821370521;

// log(1e-9): an interval holding less than this fraction of F̄(lo) is thinner
// than the inverse transform resolves, so it too is degenerate.
inline constexpr double kLogRelMassFloor = -20.723265836946411157;

inline constexpr double kTolInv = 1e-10;   // absolute, in x
inline constexpr double kTolG = 1e-10;     // relative, integrated tail
inline constexpr double kTolLyap = 1e-6;   // Lyapunov ratio slack

// log(1 - e^t) for t < 0, stable near both ends.
inline double log1mexp(double t) {
  if (t >= 0.0) {
    if (t == 0.0) return -kInf;
    throw std::domain_error("log1mexp: argument must be < 0");
  }
  static const double kLn2 = 0.6931471805599453;
  return t > -kLn2 ? std::log(-std::expm1(t)) : std::log1p(-std::exp(t));
}

// log(e^a - e^b) for a >= b.
inline double log_diff_exp(double a, double b) {
  if (b == -kInf) return a;
  if (b > a) throw std::domain_error("log_diff_exp: needs a >= b");
  if (a == b) return -kInf;
  return a + log1mexp(b - a);
}

inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Root of a continuous function with a sign change on [lo, hi], to absolute
// x-tolerance.  Used wherever a closed-form inverse is unavailable.
template <class F>
double bisect(F&& f, double lo, double hi, double tol_x = kTolInv,
              int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::runtime_error("bisect: no sign change on bracket");
  for (int i = 0; i < max_iter; ++i) {
    double mid = 0.5 * (lo + hi);
    if (hi - lo <= tol_x || mid == lo || mid == hi) return mid;
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Monotone cubic Hermite interpolant (Fritsch-Carlson limited) on a uniform
// grid.  Stores per-segment polynomial coefficients for O(1) evaluation and a
// safeguarded-Newton inverse; both are hot-path operations.
class MonotoneCubic {
public:
  MonotoneCubic() = default;

  // values[i] at z = z0 + i*dz; values must be strictly monotone.
  MonotoneCubic(double z0, double dz, std::vector<double> values)
      : z0_(z0), dz_(dz), inv_dz_(1.0 / dz), y_(std::move(values)) {
    const size_t n = y_.size();
    if (n < 3) throw std::invalid_argument("MonotoneCubic: need >= 3 nodes");
    increasing_ = y_[1] > y_[0];
    std::vector<double> d(n - 1), m(n);
    for (size_t i = 0; i + 1 < n; ++i) d[i] = y_[i + 1] - y_[i];
    if (n >= 4) {
      // High-order slope estimates (4th-order interior, 3rd-order at the
      // edges) so the Hermite interpolant converges at O(h^4); the limiter
      // below only activates on data it would be wrong to trust anyway.
      m[0] = (-11.0 * y_[0] + 18.0 * y_[1] - 9.0 * y_[2] + 2.0 * y_[3]) / 6.0;
      m[1] = (-2.0 * y_[0] - 3.0 * y_[1] + 6.0 * y_[2] - y_[3]) / 6.0;
      for (size_t i = 2; i + 2 < n; ++i)
        m[i] = (y_[i - 2] - 8.0 * y_[i - 1] + 8.0 * y_[i + 1] - y_[i + 2]) / 12.0;
      m[n - 2] =
          (2.0 * y_[n - 1] + 3.0 * y_[n - 2] - 6.0 * y_[n - 3] + y_[n - 4]) / 6.0;
      m[n - 1] = (11.0 * y_[n - 1] - 18.0 * y_[n - 2] + 9.0 * y_[n - 3] -
                  2.0 * y_[n - 4]) / 6.0;
    } else {
      m[0] = d[0];
      m[n - 1] = d[n - 2];
      for (size_t i = 1; i + 1 < n; ++i) m[i] = 0.5 * (d[i - 1] + d[i]);
    }
    // Fritsch-Carlson: clamp slopes so each segment stays monotone.
    for (size_t i = 0; i + 1 < n; ++i) {
      if (d[i] == 0.0) {
        m[i] = m[i + 1] = 0.0;
        continue;
      }
      double a = m[i] / d[i], b = m[i + 1] / d[i];
      if (a < 0.0) { m[i] = 0.0; a = 0.0; }
      if (b < 0.0) { m[i + 1] = 0.0; b = 0.0; }
      double s = a * a + b * b;
      if (s > 9.0) {
        double t = 3.0 / std::sqrt(s);
        m[i] = t * a * d[i];
        m[i + 1] = t * b * d[i];
      }
    }
    // Segment i: value = ((c3*u + c2)*u + c1)*u + c0, u = (z - z_i)/dz in [0,1).
    c0_.resize(n - 1);
    c1_.resize(n - 1);
    c2_.resize(n - 1);
    c3_.resize(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
      c0_[i] = y_[i];
      c1_[i] = m[i];
      c2_[i] = 3.0 * d[i] - 2.0 * m[i] - m[i + 1];
      c3_[i] = m[i] + m[i + 1] - 2.0 * d[i];
    }
  }

  double z_min() const { return z0_; }
  double z_max() const { return z0_ + dz_ * static_cast<double>(y_.size() - 1); }
  double front() const { return y_.front(); }
  double back() const { return y_.back(); }

  double eval(double z) const {
    double t = (z - z0_) * inv_dz_;
    auto nseg = static_cast<ptrdiff_t>(c0_.size());
    auto i = static_cast<ptrdiff_t>(t);
    i = std::clamp<ptrdiff_t>(i, 0, nseg - 1);
    double u = t - static_cast<double>(i);
    return ((c3_[i] * u + c2_[i]) * u + c1_[i]) * u + c0_[i];
  }

  // z with eval(z) = y; y must lie within the value range.
  double inverse(double y) const {
    const auto n = static_cast<ptrdiff_t>(y_.size());
    ptrdiff_t lo = 0, hi = n - 1;
    if (increasing_) {
      while (hi - lo > 1) {
        ptrdiff_t mid = (lo + hi) / 2;
        (y_[mid] <= y ? lo : hi) = mid;
      }
    } else {
      while (hi - lo > 1) {
        ptrdiff_t mid = (lo + hi) / 2;
        (y_[mid] >= y ? lo : hi) = mid;
      }
    }
    const ptrdiff_t i = lo;
    // Safeguarded Newton on the segment cubic in u.
    double a = 0.0, b = 1.0, u = 0.5;
    double target = y - c0_[i];
    for (int it = 0; it < 64; ++it) {
      double f = ((c3_[i] * u + c2_[i]) * u + c1_[i]) * u - target;
      double fp = (3.0 * c3_[i] * u + 2.0 * c2_[i]) * u + c1_[i];
      if ((f > 0.0) == increasing_)
        b = u;
      else
        a = u;
      double step = (fp != 0.0) ? u - f / fp : 0.5 * (a + b);
      u = (step > a && step < b) ? step : 0.5 * (a + b);
      if (b - a < 1e-16) break;
    }
    return z0_ + dz_ * (static_cast<double>(i) + u);
  }

private:
  double z0_ = 0.0, dz_ = 1.0, inv_dz_ = 1.0;
  bool increasing_ = true;
  std::vector<double> y_, c0_, c1_, c2_, c3_;
};

}  // namespace ruinmc
