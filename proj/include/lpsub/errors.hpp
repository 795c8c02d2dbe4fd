#pragma once

#include <stdexcept>
#include <string>

namespace lpsub {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible ambient/subspace dimensions or vector lengths.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid scalar parameter (p, t, weights, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Largest principal angle reached pi/2; the connecting geodesic is not unique.
class GeodesicNotUnique : public Error {
 public:
  using Error::Error;
};

/// A point sits (numerically) on the subspace where dist^(p-2) blows up.
class SingularPointError : public Error {
 public:
  using Error::Error;
};

/// The t-derivative does not exist (p < 1 with points on the subspace).
class NonDifferentiable : public Error {
 public:
  using Error::Error;
};

/// Malformed model/experiment configuration or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset carries no usable direction (every point at the origin).
class DegenerateData : public Error {
 public:
  using Error::Error;
};

}  // namespace lpsub
