#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (BIF, .fg, relevance tables, protocol files).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(line == 0 ? what
                        : "line " + std::to_string(line) + ", column " +
                              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Well-formed input that violates a model or query invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Computation would exceed the configured memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfe
