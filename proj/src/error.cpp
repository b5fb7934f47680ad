#include "slicescout/error.hpp"

namespace slicescout {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::format: return "format";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::corruption: return "corruption";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::size: return "size";
    case ErrorKind::value: return "value";
    case ErrorKind::input: return "input";
    case ErrorKind::usage: return "usage";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace slicescout
