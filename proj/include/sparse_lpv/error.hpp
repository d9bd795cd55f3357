#pragma once

#include <stdexcept>
#include <string>

namespace sparse_lpv {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths of inputs do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter values (negative masses, empty boxes, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Optimization problem has no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Ill-conditioning, divergence or solver breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparse_lpv
