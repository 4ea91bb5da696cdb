#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcap {

enum class ErrorKind {
  Io,
  Manifest,
  Config,
  Registry,
  Render,
  Precondition,
  Protocol,
};

/// Base exception for every fatal condition raised by the library. Item-level
/// failures (a model call that exhausted its retries, an unparseable judge
/// reply) are reported as values, never thrown.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised while reading line-delimited input; carries the 1-based line.
class LineError : public Error {
 public:
  LineError(ErrorKind kind, std::size_t line, const std::string& message)
      : Error(kind, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace vcap
