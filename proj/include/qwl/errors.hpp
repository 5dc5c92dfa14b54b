// Error taxonomy shared by all pipeline stages.
#pragma once

#include <stdexcept>
#include <string>

namespace qwl {

// Base class so stage drivers can attribute failures uniformly.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration (bad key, CFL violation, out-of-range parameter).
class ConfigError : public Error {
public:
  using Error::Error;
};

// Input outside a function's admissible domain (e.g. |u| > u_validity).
class DomainError : public Error {
public:
  using Error::Error;
};

// Numerical breakdown: NaN, step-size underflow, amplitude escape.
class StabilityError : public Error {
public:
  using Error::Error;
};

// Query outside the stored space-time slab.
class OutOfSlabError : public Error {
public:
  using Error::Error;
};

// Eikonal initialization could not pick the root near -1.
class RootError : public Error {
public:
  using Error::Error;
};

// Characteristic ordering violated at some diagnostic time.
class CrossingError : public Error {
public:
  using Error::Error;
};

// Null frame construction met L^0 <= 0.
class DegenerateError : public Error {
public:
  using Error::Error;
};

// Parallel-transported frame products drifted past frame_tol.
class FrameDriftError : public Error {
public:
  using Error::Error;
};

// Neighbor geodesics missing for a finite-difference stencil.
class StencilError : public Error {
public:
  using Error::Error;
};

// Requested (s, q) or (t, r) node not covered by the available tables.
class CoverageError : public Error {
public:
  using Error::Error;
};

// Limit fit did not converge (fitted decay exponent <= 0.2).
class FitError : public Error {
public:
  using Error::Error;
};

// Adaptive quadrature failed to meet its absolute tolerance.
class QuadratureError : public Error {
public:
  using Error::Error;
};

// File system failure while emitting artifacts.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace qwl
