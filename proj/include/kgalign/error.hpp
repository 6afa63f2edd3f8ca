#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgalign {

// Base class for every error raised by the library. Subclasses name the
// failure category so callers (and the CLI) can react without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& key)
      : Error("unknown identifier: " + key), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class NumericalRankError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch)
      : Error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kgalign
