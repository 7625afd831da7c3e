#pragma once

#include <stdexcept>
#include <string>

namespace pdtp {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parameter or argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// API misuse (mismatched lengths, bad indices, malformed input files).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

/// Requested closed-form branch does not exist for the given time-scale
/// parameter; the caller is directed to the generating-function route.
class BranchError : public Error {
 public:
  BranchError(const std::string& msg, double xi) : Error(msg), xi_(xi) {}
  double xi() const { return xi_; }

 private:
  double xi_;
};

/// A computed quantity violated a structural invariant (e.g. a probability
/// vector failed to normalize). Carries the offending residual.
class IntegrityError : public Error {
 public:
  IntegrityError(const std::string& msg, double residual)
      : Error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A series evaluation could not reach the requested accuracy and the
/// extended-precision fallback was disabled or exhausted.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double achieved)
      : Error(msg), achieved_(achieved) {}
  /// Best error bound (or residual mass) achieved before giving up.
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

}  // namespace pdtp
