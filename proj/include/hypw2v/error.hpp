#pragma once

#include <stdexcept>
#include <string>

namespace hypw2v {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain of a geometric kernel (non-finite, outside the ball, zero vector).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Distance gradient requested at (numerically) coincident points.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// h transform evaluated beyond its overflow guard.
class SaturationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite parameter update during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Corpus ingestion failure (encoding, unreadable file, misaligned corpora).
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the offending 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0) : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Evaluation could not produce a metric (too few records, undefined correlation, OOV query).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypw2v
