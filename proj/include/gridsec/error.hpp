#pragma once

#include <stdexcept>
#include <string>

namespace gridsec {

/// Malformed input text. `line` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Well-formed input that violates a domain invariant (e.g. the active set is not a tree).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed an argument outside the operation's domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was invoked on a state its precondition excludes.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem too large for an exhaustive method.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

class EmptySpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gridsec
