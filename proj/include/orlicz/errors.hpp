#pragma once

#include <stdexcept>
#include <string>

namespace orlicz {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a trustworthy value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The admissible class of a constrained problem is empty.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed structured-text input (expressions, meshes, fields, configs).
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace orlicz
