#pragma once

#include <stdexcept>
#include <string>

namespace turnkit {

enum class ErrorKind {
  schema,
  parse,
  ordering,
  insufficient_data,
  invalid_argument,
  internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Parse failures carry the 1-based line number of the offending row (0 when not row-specific).
class ParseError : public Error {
public:
  ParseError(ErrorKind kind, const std::string& what, std::size_t line = 0)
      : Error(kind, what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace turnkit
