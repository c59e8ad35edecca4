#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmd {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class DegenerateUser : public Error {
 public:
  using Error::Error;
};

class DegenerateVector : public Error {
 public:
  using Error::Error;
};

class InvalidSimilarity : public Error {
 public:
  using Error::Error;
};

class InvalidRating : public Error {
 public:
  using Error::Error;
};

class InfeasibleProblem : public Error {
 public:
  using Error::Error;
};

class InvalidCost : public Error {
 public:
  using Error::Error;
};

class InvalidDistance : public Error {
 public:
  using Error::Error;
};

/// Sinkhorn did not reach the marginal tolerance; carries the last iterate's
/// worst marginal error.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double marginal_error)
      : Error(what), marginal_error_(marginal_error) {}
  double marginal_error() const { return marginal_error_; }

 private:
  double marginal_error_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class CacheInvalid : public Error {
 public:
  using Error::Error;
};

class EmptyTestSet : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmd
