#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ergo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset()` is the byte offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Expression evaluated outside its domain (x/0, log of x <= 0, sqrt of x < 0).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Symbolic differentiation hit a non-smooth node.
class NonSmoothError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

/// Explicit scheme would lose monotonicity with the requested step.
class CflError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared during a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A long-time extraction did not settle within its horizon budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_defect)
      : Error(what + " (last defect " + std::to_string(last_defect) + ")"),
        last_defect_(last_defect) {}
  double last_defect() const noexcept { return last_defect_; }

 private:
  double last_defect_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ergo
