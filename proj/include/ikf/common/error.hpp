#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ikf {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. The message names the offending field.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Region has no feasible point.
class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

// Region is feasible but has no interior (Chebyshev radius below tolerance).
class DegeneratePolytopeError : public Error {
 public:
  using Error::Error;
};

class BudgetExceededError : public Error {
 public:
  BudgetExceededError(const std::string& what, double estimated_patterns)
      : Error(what), estimated_patterns_(estimated_patterns) {}
  double estimated_patterns() const noexcept { return estimated_patterns_; }

 private:
  double estimated_patterns_;
};

class CoverageViolationError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class EpisodeStateError : public Error {
 public:
  using Error::Error;
};

// Pipeline failure tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, int exit_code, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const noexcept { return stage_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

}  // namespace ikf
