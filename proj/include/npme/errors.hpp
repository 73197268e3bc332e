#pragma once

#include <stdexcept>
#include <string>

namespace npme {

/// Argument outside the mathematical domain of an operation (t <= 0, x < 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A flight configuration (n, d, case) that has no porous-medium counterpart.
class ValidityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed call: empty inputs, unsorted samples, zero batch size.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace npme
