#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slicescout {

enum class ErrorKind {
  format,       // malformed file header or record
  unsupported,  // valid but outside the supported subset
  corruption,   // truncated or non-finite payload
  parameter,    // caller supplied an out-of-range argument
  size,         // dimensions too small for the requested operation
  value,        // non-finite or otherwise invalid numeric input
  input,        // inconsistent input data (duplicates, missing labels)
  usage,        // command-line misuse
  io,           // filesystem failure
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace slicescout
