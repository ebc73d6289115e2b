#pragma once

#include <stdexcept>
#include <string>

namespace nlts {

/// Base class of every error raised by the library. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a scalar parameter was violated.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during optimisation.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Simulated path left the finite range.
class SimulationError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failure (singular system beyond jitter).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files or configs.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlts
