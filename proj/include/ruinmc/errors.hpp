#pragma once

#include <stdexcept>
#include <string>

namespace ruinmc {

// Conditional mass below mass_floor: the interval cannot be sampled reliably.
class degenerate_interval_error : public std::runtime_error {
public:
  explicit degenerate_interval_error(const std::string& what)
      : std::runtime_error(what) {}
};

// Cutoffs came out non-monotone for the current state; signals eta_* too
// small for the configured cutoff rules.  Surfaced, never silently fixed.
class cutoff_inconsistency_error : public std::runtime_error {
public:
  explicit cutoff_inconsistency_error(const std::string& what)
      : std::runtime_error(what) {}
};

// The coupling residual q_s - p(s) f went negative at an evaluated point;
// signals kappa / eta_* too small for the residual decomposition.
class residual_negativity_error : public std::runtime_error {
public:
  explicit residual_negativity_error(const std::string& what)
      : std::runtime_error(what) {}
};

// Too few accepted paths for a distributional diagnostic to mean anything.
class insufficient_sample_error : public std::runtime_error {
public:
  explicit insufficient_sample_error(const std::string& what)
      : std::runtime_error(what) {}
};

// Adaptive quadrature failed to reach the requested tolerance; message
// carries the achieved error estimate.
class quadrature_error : public std::runtime_error {
public:
  explicit quadrature_error(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace ruinmc
