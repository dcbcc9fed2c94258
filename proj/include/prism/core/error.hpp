#ifndef PRISM_CORE_ERROR_HPP
#define PRISM_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace prism {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized input (manifest line, checkpoint, grammar file, ...).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-finite loss, degenerate sample, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}
}  // namespace detail

}  // namespace prism

#endif
