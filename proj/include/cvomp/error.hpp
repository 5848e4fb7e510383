#pragma once

#include <stdexcept>
#include <string>

namespace cvomp {

// Precondition violations on caller-supplied arguments.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A column subset whose submatrix is (numerically) rank deficient.
class DegenerateSupport : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A closed-form quantity that is undefined for the given parameters,
// e.g. an interval whose denominator becomes non-positive.
class InfeasibleParameter : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Configuration or file-format problems surfaced to the CLI (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cvomp
