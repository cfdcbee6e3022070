#include "aatr/error.hpp"

namespace aatr {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Training: return "training";
    case ErrorKind::Placement: return "placement";
    case ErrorKind::Undefined: return "undefined";
  }
  return "unknown";
}

}  // namespace aatr
