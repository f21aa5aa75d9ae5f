#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace tvmrf {

// Invalid arguments or violated preconditions.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data (shapes, files, parse errors).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cholesky factorization hit a non-positive pivot.
class NotPositiveDefinite : public NumericalError {
 public:
  NotPositiveDefinite(std::size_t pivot, std::optional<std::size_t> time = std::nullopt)
      : NumericalError(describe(pivot, time)), pivot_(pivot), time_(time) {}

  std::size_t pivot() const noexcept { return pivot_; }
  std::optional<std::size_t> time() const noexcept { return time_; }

 private:
  static std::string describe(std::size_t pivot, std::optional<std::size_t> time) {
    std::string msg = "matrix is not positive definite (pivot " + std::to_string(pivot) + ")";
    if (time) msg += " at time index " + std::to_string(*time);
    return msg;
  }

  std::size_t pivot_;
  std::optional<std::size_t> time_;
};

// Kernel weights vanished or became non-finite for a requested time.
class DegenerateWeights : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace tvmrf
