#ifndef CLARITY_ERRORS_HPP
#define CLARITY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clarity {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File or directory problems (missing path, unreadable/unwritable file).
struct IoError : Error {
  using Error::Error;
};

// Tensor/image dimension mismatches and out-of-range sizes.
struct ShapeError : Error {
  using Error::Error;
};

// Bad argument values (zero-norm vector, invalid kind, batch not divisible).
struct ValueError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration files / overrides.
struct ConfigError : Error {
  using Error::Error;
};

// Corrupt, truncated or incompatible checkpoint containers.
struct CheckpointError : Error {
  using Error::Error;
};

// A training step produced a non-finite loss or parameter.
struct NonFiniteError : Error {
  using Error::Error;
};

// Metric cannot be computed: no usable statistics (e.g. constant image).
struct InsufficientStatisticsError : Error {
  using Error::Error;
};

// PIQE: no spatially active blocks.
struct InsufficientActivityError : Error {
  using Error::Error;
};

}  // namespace clarity

#endif
