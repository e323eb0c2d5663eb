#pragma once

#include <stdexcept>
#include <string>

namespace tgh {

// Base of every failure raised by the library. The CLI maps these to exit
// status 2 (numerical failure) unless noted otherwise.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (bad probability,
// omega <= 0, h < 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

// An observation lies outside the transformed knot range [Y_1, Y_K].
class SupportViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class InitializationFailure : public Error {
 public:
  using Error::Error;
};

class SingularInformation : public Error {
 public:
  using Error::Error;
};

}  // namespace tgh
