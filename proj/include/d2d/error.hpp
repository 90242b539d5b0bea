#pragma once

#include <stdexcept>
#include <string>

namespace d2d {

enum class ErrorKind {
  Format,        // malformed file contents
  Validation,    // shape / geometry / argument contradictions
  Data,          // non-finite values
  Precondition,  // operation used on inputs it is not defined for
  NotFound,      // missing file
  Degenerate,    // division by a zero expectation, singular projection
  Io,            // read/write failure
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace d2d
