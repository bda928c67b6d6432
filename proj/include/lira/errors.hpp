#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lira {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& detail, const std::string& source = {})
      : std::runtime_error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
        line_(line),
        detail_(detail) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A user with no ratings was handed to an operation that needs at least one.
class EmptyProfileError : public DomainError {
 public:
  using DomainError::DomainError;
};

class EmptyEvaluationError : public DomainError {
 public:
  using DomainError::DomainError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lira
