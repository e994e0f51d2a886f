#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csbm {

/// Argument outside the natural/mean/support domain of a family.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed model, dataset or configuration.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : ValidationError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Numerical failure (eigensolver non-convergence, empty block, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyBlockError : public NumericError {
 public:
  explicit EmptyBlockError(int block)
      : NumericError("block " + std::to_string(block) + " is empty"), block_(block) {}

  int block() const { return block_; }

 private:
  int block_;
};

}  // namespace csbm
