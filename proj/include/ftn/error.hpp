#pragma once

#include <stdexcept>
#include <string>

namespace ftn {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or violated precondition on user input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Toeplitz system too close to singular for the requested AR order.
class IllConditioned : public Error {
 public:
  IllConditioned(double condition, const std::string& what)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

class NonPositiveInnovation : public Error {
 public:
  using Error::Error;
};

class UnstableModel : public Error {
 public:
  using Error::Error;
};

// Covariance factorization met a pivot below the tolerated negative floor.
class NotPositiveSemidefinite : public Error {
 public:
  NotPositiveSemidefinite(double pivot, std::size_t index, const std::string& what)
      : Error(what), pivot_(pivot), index_(index) {}
  double pivot() const noexcept { return pivot_; }
  std::size_t index() const noexcept { return index_; }

 private:
  double pivot_;
  std::size_t index_;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

// Run exceeded the floored-variance budget.
class NumericalHealthError : public Error {
 public:
  using Error::Error;
};

}  // namespace ftn
