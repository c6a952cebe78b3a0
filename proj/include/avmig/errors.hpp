#ifndef AVMIG_ERRORS_HPP_
#define AVMIG_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace avmig {

// Invalid or inconsistent configuration, detected before any work starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line` is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a data invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A transfer needs a link that is missing or has zero capacity.
class InfeasibleLink : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (shape mismatch, unknown id, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace avmig

#endif  // AVMIG_ERRORS_HPP_
