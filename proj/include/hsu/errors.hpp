#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace hsu {

/// Precondition violated by the caller (bad dimensions, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Data is well-formed but cannot support the requested computation
/// (rank deficiency, zero similarity denominators, ...).
class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver produced a non-finite value.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Filesystem failure (missing file, unwritable path).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary format violation. Carries the offending field and its byte offset.
class FormatError : public IoError {
 public:
  FormatError(std::string field, std::size_t offset, const std::string& detail)
      : IoError("format error in field '" + field + "' at byte " + std::to_string(offset) + ": " +
                detail),
        field_(std::move(field)),
        offset_(offset) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string field_;
  std::size_t offset_;
};

/// Text format violation with a 1-based line number.
class ParseError : public IoError {
 public:
  ParseError(std::size_t line, const std::string& detail)
      : IoError("parse error at line " + std::to_string(line) + ": " + detail), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace hsu
