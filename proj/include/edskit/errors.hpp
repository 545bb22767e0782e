#pragma once

#include <stdexcept>
#include <string>

namespace edskit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid request, e.g. a Taylor degree above the supported cap.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Division by a quantity whose constant term is (numerically) zero.
class SingularDenominator : public Error {
 public:
  using Error::Error;
};

/// Function argument outside its domain (sqrt of a negative value, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A flow or trajectory produced non-finite values.
class FlowDivergence : public Error {
 public:
  using Error::Error;
};

/// Richardson estimates at h and h/2 disagree beyond the allowed threshold.
class StepTooLarge : public Error {
 public:
  using Error::Error;
};

/// Document does not follow the expected JSON layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A field reads a jet coordinate above its declared order.
class JetOrderViolation : public Error {
 public:
  JetOrderViolation(std::string field, std::string identifier)
      : Error("jet-order violation in " + field + ": identifier '" + identifier +
              "' is not allowed there"),
        field_(std::move(field)),
        identifier_(std::move(identifier)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& identifier() const noexcept { return identifier_; }

 private:
  std::string field_;
  std::string identifier_;
};

/// Lagrangian has a nonzero second derivative in the accelerations.
class NonAffineLagrangian : public Error {
 public:
  using Error::Error;
};

}  // namespace edskit
