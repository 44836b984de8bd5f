#pragma once

#include <stdexcept>
#include <string>

namespace oprisk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (negative amount, bad probability, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A formula is evaluated outside the region where it is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The discretized aggregate cannot resolve the requested quantity; retry with a larger span.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// The single-loss approximation needs (1 - p) / lambda < 1.
class UndefinedSla : public DomainError {
 public:
  using DomainError::DomainError;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace oprisk
