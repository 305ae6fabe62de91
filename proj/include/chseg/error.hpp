#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chseg {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// A field picked up a NaN/Inf, an inverse transform left a large imaginary
/// residue, or an iterative solver diverged.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::ptrdiff_t iteration = -1)
      : Error(iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")" : what),
        iteration_(iteration) {}

  std::ptrdiff_t iteration() const noexcept { return iteration_; }

 private:
  std::ptrdiff_t iteration_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A metric that has no value for the given inputs (e.g. HD95 of an empty mask).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace chseg
