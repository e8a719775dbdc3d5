#pragma once

#include <stdexcept>
#include <string>

namespace resplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SourceLocation {
  int line = 0;
  int column = 0;
};

/// Malformed text input (constraint files, scenario files, plans, formulas).
class ParseError : public Error {
 public:
  ParseError(SourceLocation where, const std::string& message)
      : Error(std::to_string(where.line) + ":" + std::to_string(where.column) + ": " + message),
        where_(where),
        message_(message) {}

  SourceLocation where() const { return where_; }
  const std::string& message() const { return message_; }

 private:
  SourceLocation where_;
  std::string message_;
};

/// Well-formed input that refers to something undeclared or out of range.
/// Carries a source location when the input came from text.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error(message), message_(message) {}
  ValidationError(SourceLocation where, const std::string& message)
      : Error(std::to_string(where.line) + ":" + std::to_string(where.column) + ": " + message),
        where_(where),
        has_location_(true),
        message_(message) {}

  bool has_location() const { return has_location_; }
  SourceLocation where() const { return where_; }
  const std::string& message() const { return message_; }

 private:
  SourceLocation where_;
  bool has_location_ = false;
  std::string message_;
};

/// A joint action was applied in a state where one of its preconditions fails.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// No plan achieves the mission goals within the horizon.
class UnsolvableError : public Error {
 public:
  using Error::Error;
};

/// The search spent its node budget without finding any goal-achieving plan.
class BudgetExceededError : public Error {
 public:
  using Error::Error;
};

/// An enumeration grew past a configured size bound (automaton states,
/// outcome-tree leaves, expectimax states).
class BoundExceededError : public Error {
 public:
  using Error::Error;
};

}  // namespace resplan
