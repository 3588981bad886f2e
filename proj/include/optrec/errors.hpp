#pragma once

#include <stdexcept>
#include <string>

namespace optrec {

/// Raised when an argument lies outside [-1, 1] or a size is not positive.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for malformed problem specifications. `field()` names the
/// offending entry so front ends can point at it.
class SpecError : public std::invalid_argument {
 public:
  SpecError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace optrec
