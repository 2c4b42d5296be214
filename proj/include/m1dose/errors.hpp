#pragma once

#include <stdexcept>
#include <string>

namespace m1dose {

/// Invalid user input: materials, grids, scenario values.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A state that must be realizable is not. Indicates a bug upstream.
class InvariantViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Malformed scenario file; the message carries the line number.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Hard failure of the energy march (realizability lost after an update).
class SolverFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace m1dose
