#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace openeval {

// Base for every recoverable input problem. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed document or record. `line` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A well-formed value that breaks a domain invariant (negative width,
// score outside [0,1], empty candidate list, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A reference to an id that does not exist (unknown category, unknown image).
class ReferenceError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a mathematical function (log of 0, zero norm).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller broke a precondition the callee asserts (unsorted input, malformed
// model distribution).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Assignment with more ground-truth objects than queries.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Input too large for an exhaustive routine.
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace openeval
