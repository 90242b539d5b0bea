#include "d2d/error.hpp"

namespace d2d {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::NotFound: return "not found";
    case ErrorKind::Degenerate: return "degenerate input";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

}  // namespace d2d
