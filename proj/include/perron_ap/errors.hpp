#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace perron_ap {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Trig-poly product exceeded the frequency cap even after the drop pass.
struct ProductOverflow : Error {
  using Error::Error;
};

/// Grid functions with incompatible (t0, h, size).
struct GridMismatch : Error {
  using Error::Error;
};

/// Tail model cannot be integrated against the requested exponential kernel,
/// or fails to dominate the boundary samples.
struct TailUnbounded : Error {
  using Error::Error;
};

/// Characteristic roots too close to build dichotomy data.
struct DegenerateRoots : Error {
  using Error::Error;
};

/// Two characteristic roots share a real part (no exponential dichotomy).
struct RepeatedRealParts : Error {
  using Error::Error;
};

/// Iteration hit its cap before meeting the stopping rule.
struct NoConvergence : Error {
  using Error::Error;
};

/// An iterate left the certified invariant ball.
struct BallEscape : Error {
  using Error::Error;
};

/// beta must stay below min_j |Re gamma_j|.
struct BetaTooLarge : Error {
  using Error::Error;
};

/// Linear-part bound L_0 >= 1: no contraction ball exists.
struct L0GreaterThanOne : Error {
  using Error::Error;
};

/// Same, for the second-stage (psi) equation.
struct L0ThetaGreaterThanOne : Error {
  using Error::Error;
};

/// A sufficient-condition certificate failed and force was not set.
struct CertificateFailed : Error {
  using Error::Error;
};

/// One or more roots failed their existence certificate.
struct PerRootFailure : Error {
  std::vector<int> failing_roots;
  PerRootFailure(const std::string& what, std::vector<int> roots)
      : Error(what), failing_roots(std::move(roots)) {}
};

/// Malformed or inconsistent run configuration.
struct ConfigParse : Error {
  using Error::Error;
};

/// Adaptive integrator step size underflowed.
struct StepUnderflow : Error {
  using Error::Error;
};

}  // namespace perron_ap
