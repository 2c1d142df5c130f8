#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mist {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class EmptySketch : public Error {
 public:
  EmptySketch() : Error("query on an empty sketch") {}
};

class EmptyLeaf : public Error {
 public:
  EmptyLeaf() : Error("leaf has no class with mass") {}
};

class InvalidSplit : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised while reading external data. `line` is 1-based, 0 when not tied to a row.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace mist
