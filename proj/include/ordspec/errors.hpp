// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ordspec {

/// Caller-side failures: bad input files, invalid arguments, violated
/// preconditions. The CLI maps these to exit status 1.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public UserError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : UserError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public UserError {
 public:
  IntegrityError(const std::string& what, std::size_t line = 0)
      : UserError(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvalidArgument : public UserError {
 public:
  using UserError::UserError;
};

/// Shape mismatch inside a computation graph; the message names the primitive.
class ShapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite loss or gradient during training.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ordspec
